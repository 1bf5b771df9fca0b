#include "idian/networks.hpp"

#include <cstring>
#include <fstream>
#include <string>

#include "idian/common.hpp"

namespace idian {

const char* net_name(NetId id) {
    switch (id) {
        case NetId::imputer: return "imputer";
        case NetId::src_encoder: return "src_encoder";
        case NetId::tgt_encoder: return "tgt_encoder";
        case NetId::src_decoder: return "src_decoder";
        case NetId::tgt_decoder: return "tgt_decoder";
        case NetId::projector: return "projector";
        case NetId::discriminator: return "discriminator";
        case NetId::classifier: return "classifier";
    }
    throw ConfigError("unknown network id");
}

NetId net_from_index(int i) {
    if (i < 0 || i >= kNetCount) throw ConfigError("network index out of range: " + std::to_string(i));
    return static_cast<NetId>(i);
}

Mlp& Model::net(NetId id) {
    switch (id) {
        case NetId::imputer: return imputer;
        case NetId::src_encoder: return src_encoder;
        case NetId::tgt_encoder: return tgt_encoder;
        case NetId::src_decoder: return src_decoder;
        case NetId::tgt_decoder: return tgt_decoder;
        case NetId::projector: return projector;
        case NetId::discriminator: return discriminator;
        case NetId::classifier: return classifier;
    }
    throw ConfigError("unknown network id");
}

const Mlp& Model::net(NetId id) const {
    return const_cast<Model*>(this)->net(id);
}

std::size_t Model::param_count() const {
    std::size_t n = 0;
    for (int i = 0; i < kNetCount; ++i) n += net(net_from_index(i)).param_count();
    return n;
}

Model build_model(int d_s, int d_t, int n_c, std::uint64_t init_seed) {
    if (d_s < 1 || d_t < 1) throw ConfigError("build_model: feature dims must be positive");
    if (n_c < 2) throw ConfigError("build_model: need at least two classes");

    using A = Activation;
    auto seed_for = [&](const char* name) { return derive_seed(init_seed, name); };

    Model m;
    m.d_s = d_s;
    m.d_t = d_t;
    m.n_c = n_c;
    m.imputer = make_mlp({d_t, 512, 512, 512, d_t}, {A::relu, A::relu, A::relu, A::sigmoid},
                         seed_for("imputer"));
    m.src_encoder = make_mlp({d_s, 2048, 1024}, {A::relu, A::identity}, seed_for("src_encoder"));
    m.tgt_encoder = make_mlp({d_t, 2048, 1024}, {A::relu, A::identity}, seed_for("tgt_encoder"));
    m.src_decoder = make_mlp({1024, 2048, d_s}, {A::relu, A::identity}, seed_for("src_decoder"));
    m.tgt_decoder = make_mlp({1024, 2048, d_t}, {A::relu, A::identity}, seed_for("tgt_decoder"));
    m.projector = make_mlp({1024, 512, 256}, {A::relu, A::identity}, seed_for("projector"));
    m.discriminator = make_mlp({256, 512, 1}, {A::relu, A::sigmoid}, seed_for("discriminator"));
    m.classifier = make_mlp({256, n_c}, {A::softmax}, seed_for("classifier"));
    return m;
}

Tensor NoiseSource::normal_matrix(Eigen::Index rows, Eigen::Index cols) {
    Tensor out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            out(i, j) = rng_.normal();
    return out;
}

Tensor indexed_noise(std::uint64_t seed, std::uint64_t base_index, Eigen::Index rows,
                     Eigen::Index cols) {
    Tensor out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        Rng row_rng(derive_seed(seed, "noise", base_index + static_cast<std::uint64_t>(i)));
        for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = row_rng.normal();
    }
    return out;
}

Tensor impute(const Model& model, const Tensor& x, const Tensor& m, const Tensor& eps) {
    if (x.rows() != m.rows() || x.cols() != m.cols())
        throw ConfigError("impute: mask shape differs from features");
    if (x.cols() != model.d_t)
        throw ConfigError("impute: expected " + std::to_string(model.d_t) + " features, got " +
                          std::to_string(x.cols()));
    if (eps.rows() != x.rows() || eps.cols() != x.cols())
        throw ConfigError("impute: noise shape differs from features");
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double v = m.reshaped()(i);
        if (v != 0.0 && v != 1.0) throw ConfigError("impute: mask entries must be 0 or 1");
    }
    if (((1.0 - m.array()) * x.array() != 0.0).any())
        throw UsageError("impute: masked entries must hold the 0 placeholder");

    const Tensor fill_in = (m.array() == 1.0).select(x, eps);
    const Tensor ghat = model.imputer.forward(fill_in);
    return (m.array() == 1.0).select(x, ghat);
}

Tensor target_class_probs(const Model& model, const Tensor& xhat) {
    return model.classifier.forward(model.projector.forward(model.tgt_encoder.forward(xhat)));
}

namespace {

constexpr char kMagic[8] = {'I', 'D', 'I', 'A', 'N', 'C', 'K', '1'};

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ofstream& out, T v) {
    write_bytes(out, &v, sizeof(T));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n, const char* what) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
        throw ParseError(std::string("checkpoint truncated while reading ") + what);
}

template <typename T>
T read_pod(std::ifstream& in, const char* what) {
    T v;
    read_bytes(in, &v, sizeof(T), what);
    return v;
}

std::uint8_t act_code(Activation a) {
    switch (a) {
        case Activation::identity: return 0;
        case Activation::relu: return 1;
        case Activation::sigmoid: return 2;
        case Activation::softmax: return 3;
    }
    throw ConfigError("unknown activation");
}

Activation act_from_code(std::uint8_t c) {
    switch (c) {
        case 0: return Activation::identity;
        case 1: return Activation::relu;
        case 2: return Activation::sigmoid;
        case 3: return Activation::softmax;
    }
    throw ParseError("checkpoint holds unknown activation code " + std::to_string(c));
}

} // namespace

void save_checkpoint(const Model& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");

    write_bytes(out, kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, 1); // format version
    write_pod<std::int32_t>(out, model.d_s);
    write_pod<std::int32_t>(out, model.d_t);
    write_pod<std::int32_t>(out, model.n_c);
    write_pod<std::uint64_t>(out, meta.master_seed);
    write_pod<std::uint64_t>(out, meta.config_hash);
    write_pod<std::uint32_t>(out, kNetCount);
    for (int i = 0; i < kNetCount; ++i) {
        const Mlp& net = model.net(net_from_index(i));
        write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(net.layers.size()));
        for (const DenseLayer& layer : net.layers) {
            write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(layer.in_dim()));
            write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(layer.out_dim()));
            write_pod<std::uint8_t>(out, act_code(layer.act));
            write_bytes(out, layer.weights.data(),
                        sizeof(double) * static_cast<std::size_t>(layer.weights.size()));
            write_bytes(out, layer.bias.data(),
                        sizeof(double) * static_cast<std::size_t>(layer.bias.size()));
        }
    }
    if (!out) throw IoError("write failed for " + path.string());
}

std::pair<Model, CheckpointMeta> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());

    char magic[sizeof(kMagic)];
    read_bytes(in, magic, sizeof(magic), "magic");
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ParseError(path.string() + " is not a model checkpoint");
    const auto version = read_pod<std::uint32_t>(in, "version");
    if (version != 1) throw ParseError("unsupported checkpoint version " + std::to_string(version));

    const auto d_s = read_pod<std::int32_t>(in, "d_s");
    const auto d_t = read_pod<std::int32_t>(in, "d_t");
    const auto n_c = read_pod<std::int32_t>(in, "n_c");
    CheckpointMeta meta;
    meta.master_seed = read_pod<std::uint64_t>(in, "master_seed");
    meta.config_hash = read_pod<std::uint64_t>(in, "config_hash");
    const auto net_count = read_pod<std::uint32_t>(in, "net count");
    if (net_count != static_cast<std::uint32_t>(kNetCount))
        throw ParseError("checkpoint holds " + std::to_string(net_count) + " networks, expected " +
                         std::to_string(kNetCount));

    Model model = build_model(d_s, d_t, n_c, 0);
    for (int i = 0; i < kNetCount; ++i) {
        Mlp& net = model.net(net_from_index(i));
        const auto layer_count = read_pod<std::uint32_t>(in, "layer count");
        if (layer_count != net.layers.size())
            throw ParseError(std::string("checkpoint layer count mismatch in ") +
                             net_name(net_from_index(i)));
        for (DenseLayer& layer : net.layers) {
            const auto rows = read_pod<std::uint32_t>(in, "layer rows");
            const auto cols = read_pod<std::uint32_t>(in, "layer cols");
            const auto act = act_from_code(read_pod<std::uint8_t>(in, "activation"));
            if (rows != static_cast<std::uint32_t>(layer.in_dim()) ||
                cols != static_cast<std::uint32_t>(layer.out_dim()) || act != layer.act)
                throw ParseError(std::string("checkpoint layer shape mismatch in ") +
                                 net_name(net_from_index(i)));
            read_bytes(in, layer.weights.data(),
                       sizeof(double) * static_cast<std::size_t>(layer.weights.size()), "weights");
            read_bytes(in, layer.bias.data(),
                       sizeof(double) * static_cast<std::size_t>(layer.bias.size()), "bias");
        }
    }
    return {std::move(model), meta};
}

} // namespace idian
