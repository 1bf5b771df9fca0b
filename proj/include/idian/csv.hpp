#pragma once

#include <filesystem>

#include "idian/data.hpp"

namespace idian {

/// Reads `label,f0,...,f{d-1}` rows. An empty feature field means missing
/// (mask 0, placeholder 0); an empty label field means unlabeled. Labeled
/// instances are stably moved ahead of unlabeled ones so the labeled-prefix
/// invariant holds; a file written by save_csv keeps its order.
DomainDataset load_csv(const std::filesystem::path& path, Domain domain, int n_classes);

void save_csv(const DomainDataset& ds, const std::filesystem::path& path);

/// Parallel 0/1 audit file, one column per feature.
void save_mask_csv(const DomainDataset& ds, const std::filesystem::path& path);

} // namespace idian
