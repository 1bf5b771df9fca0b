#include "idian/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace idian {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, std::size_t row, std::size_t col) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("row " + std::to_string(row) + ", field " + std::to_string(col) +
                         ": not a number: '" + s + "'");
    return v;
}

int parse_label(const std::string& s, int n_classes, std::size_t row) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError("row " + std::to_string(row) + ": bad label '" + s + "'");
    if (v < 0 || v >= n_classes)
        throw ParseError("row " + std::to_string(row) + ": label " + std::to_string(v) +
                         " outside [0, " + std::to_string(n_classes) + ")");
    return v;
}

} // namespace

DomainDataset load_csv(const std::filesystem::path& path, Domain domain, int n_classes) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
    std::vector<std::string> header = split_fields(line);
    if (header.size() < 2 || header[0] != "label")
        throw ParseError(path.string() + ": header must be label,f0,...");
    int dim = static_cast<int>(header.size()) - 1;

    DomainDataset ds;
    ds.domain = domain;
    ds.dim = dim;
    ds.n_classes = n_classes;

    std::vector<Instance> labeled, unlabeled;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::vector<std::string> fields = split_fields(line);
        if (fields.size() != header.size())
            throw ParseError("row " + std::to_string(row) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        Instance ins;
        ins.features.resize(static_cast<std::size_t>(dim));
        ins.mask.resize(static_cast<std::size_t>(dim));
        if (!fields[0].empty()) ins.label = parse_label(fields[0], n_classes, row);
        for (int k = 0; k < dim; ++k) {
            const std::string& f = fields[static_cast<std::size_t>(k) + 1];
            if (f.empty()) {
                ins.features[static_cast<std::size_t>(k)] = 0.0;
                ins.mask[static_cast<std::size_t>(k)] = 0;
            } else {
                ins.features[static_cast<std::size_t>(k)] = parse_double(f, row, static_cast<std::size_t>(k) + 1);
                ins.mask[static_cast<std::size_t>(k)] = 1;
            }
        }
        if (domain == Domain::source && !ins.label)
            throw ParseError("row " + std::to_string(row) + ": source instances must be labeled");
        (ins.label ? labeled : unlabeled).push_back(std::move(ins));
    }

    ds.labeled_count = labeled.size();
    ds.instances = std::move(labeled);
    ds.instances.insert(ds.instances.end(), std::make_move_iterator(unlabeled.begin()),
                        std::make_move_iterator(unlabeled.end()));
    ds.validate();
    return ds;
}

void save_csv(const DomainDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "label";
    for (int k = 0; k < ds.dim; ++k) out << ",f" << k;
    out << "\n";
    char buf[40];
    for (const Instance& ins : ds.instances) {
        if (ins.label) out << *ins.label;
        for (std::size_t k = 0; k < ins.features.size(); ++k) {
            out << ',';
            if (ins.mask[k]) {
                std::snprintf(buf, sizeof buf, "%.17g", ins.features[k]);
                out << buf;
            }
        }
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

void save_mask_csv(const DomainDataset& ds, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    for (int k = 0; k < ds.dim; ++k) out << (k ? "," : "") << "m" << k;
    out << "\n";
    for (const Instance& ins : ds.instances) {
        for (std::size_t k = 0; k < ins.mask.size(); ++k)
            out << (k ? "," : "") << (ins.mask[k] ? '1' : '0');
        out << "\n";
    }
    if (!out) throw IoError("write failed: " + path.string());
}

} // namespace idian
