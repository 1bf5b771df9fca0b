#include "idian/gradsuite.hpp"

#include <numeric>

#include "idian/common.hpp"
#include "idian/losses.hpp"
#include "idian/optim.hpp"
#include "idian/rng.hpp"
#include "idian/tape.hpp"

namespace idian {

Model make_tiny_model(int d_s, int d_t, int n_c, std::uint64_t seed) {
    if (d_s > 8 || d_t > 8 || n_c > 8)
        throw ConfigError("make_tiny_model: widths above 8 defeat the purpose");
    using A = Activation;
    auto seed_for = [&](const char* name) { return derive_seed(seed, name); };
    Model m;
    m.d_s = d_s;
    m.d_t = d_t;
    m.n_c = n_c;
    m.imputer = make_mlp({d_t, 5, d_t}, {A::relu, A::sigmoid}, seed_for("imputer"));
    m.src_encoder = make_mlp({d_s, 7, 6}, {A::relu, A::identity}, seed_for("src_encoder"));
    m.tgt_encoder = make_mlp({d_t, 7, 6}, {A::relu, A::identity}, seed_for("tgt_encoder"));
    m.src_decoder = make_mlp({6, 7, d_s}, {A::relu, A::identity}, seed_for("src_decoder"));
    m.tgt_decoder = make_mlp({6, 7, d_t}, {A::relu, A::identity}, seed_for("tgt_decoder"));
    m.projector = make_mlp({6, 5, 4}, {A::relu, A::identity}, seed_for("projector"));
    m.discriminator = make_mlp({4, 3, 1}, {A::relu, A::sigmoid}, seed_for("discriminator"));
    m.classifier = make_mlp({4, n_c}, {A::softmax}, seed_for("classifier"));

    // Central differences need a probe point where the loss is smooth. With
    // the stock zero biases, a zero-filled row can silence an entire relu
    // layer, which parks the next layer's pre-activation exactly on the relu
    // corner where the two-sided difference and the one-sided derivative
    // legitimately disagree. Biases bounded away from zero keep the probes
    // off that corner without touching the gradient code under test.
    Rng rng(seed_for("bias"));
    for (int i = 0; i < kNetCount; ++i)
        for (DenseLayer& l : m.net(net_from_index(i)).layers)
            for (Eigen::Index j = 0; j < l.bias.cols(); ++j)
                l.bias(0, j) = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.05, 0.2);
    return m;
}

Batch make_random_batch(const Model& model, Eigen::Index n, double missing_rate,
                        std::uint64_t seed) {
    Rng rng(seed);
    auto fill_uniform = [&](Tensor& t) {
        for (Eigen::Index i = 0; i < t.rows(); ++i)
            for (Eigen::Index j = 0; j < t.cols(); ++j) t(i, j) = rng.uniform();
    };
    auto labels = [&](std::size_t count) {
        std::vector<int> y(count);
        for (int& v : y) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(model.n_c)));
        return y;
    };
    auto masked_block = [&](Tensor& x, Tensor& m) {
        x.resize(n, model.d_t);
        m.resize(n, model.d_t);
        fill_uniform(x);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < model.d_t; ++j) {
                if (rng.bernoulli(missing_rate)) {
                    m(i, j) = 0.0;
                    x(i, j) = 0.0;
                } else {
                    m(i, j) = 1.0;
                }
            }
    };

    Batch b;
    b.src_x.resize(n, model.d_s);
    fill_uniform(b.src_x);
    b.src_y = labels(static_cast<std::size_t>(n));
    masked_block(b.tl_x, b.tl_m);
    b.tl_y = labels(static_cast<std::size_t>(n));
    masked_block(b.tu_x, b.tu_m);
    b.src_idx.resize(static_cast<std::size_t>(n));
    std::iota(b.src_idx.begin(), b.src_idx.end(), 0);
    b.tl_idx = b.src_idx;
    b.tu_idx = b.src_idx;
    return b;
}

std::vector<GradCheckResult> run_gradient_suite(std::uint64_t seed) {
    Model model = make_tiny_model(5, 4, 3, derive_seed(seed, "model"));
    const Batch batch = make_random_batch(model, 3, 0.4, derive_seed(seed, "batch"));
    NoiseSource noise(derive_seed(seed, "noise"));
    const Tensor eps_tl = noise.normal_matrix(3, model.d_t);
    const Tensor eps_tu = noise.normal_matrix(3, model.d_t);

    // Deliberately uneven weights so any dropped scale factor shows up.
    LossWeights w;
    w.alpha = 0.7;
    w.beta = 1.3;
    w.gamma = 0.9;
    w.lambda = 1.1;
    w.rho = 1.0;

    std::vector<ParamRef> refs;
    for (int i = 0; i < kNetCount; ++i) {
        auto net_refs = param_refs(model.net(net_from_index(i)), i);
        refs.insert(refs.end(), net_refs.begin(), net_refs.end());
    }

    enum class Root { cls, ae, cont, adv, total };
    auto pick = [](const LossGraph& g, Root r) {
        switch (r) {
            case Root::cls: return g.cls;
            case Root::ae: return g.ae;
            case Root::cont: return g.cont;
            case Root::adv: return g.adv;
            case Root::total: return g.total;
        }
        return -1;
    };

    auto check = [&](const char* name, const GraphSwitches& sw, Root root) {
        auto loss_at = [&]() {
            Tape tape;
            const LossGraph g = build_loss_graph(tape, model, batch, eps_tl, eps_tu, w, sw);
            return tape.scalar(pick(g, root));
        };
        Tape tape;
        const LossGraph g = build_loss_graph(tape, model, batch, eps_tl, eps_tu, w, sw);
        tape.backward(pick(g, root));
        const GradientSet analytic = tape.gradients();
        const double err = grad_check(loss_at, refs, analytic, 1e-5);
        return GradCheckResult{name, err};
    };

    const GraphSwitches all_on;
    GraphSwitches zero_fill = all_on;
    zero_fill.imputation = false;
    GraphSwitches cross = all_on;
    cross.pair_mode = PairMode::cross_only;

    std::vector<GradCheckResult> results;
    results.push_back(check("classification", all_on, Root::cls));
    results.push_back(check("reconstruction", all_on, Root::ae));
    results.push_back(check("contrastive", all_on, Root::cont));
    results.push_back(check("adversarial", all_on, Root::adv));
    results.push_back(check("objective", all_on, Root::total));
    results.push_back(check("objective_zero_fill", zero_fill, Root::total));
    results.push_back(check("objective_cross_pairs", cross, Root::total));
    return results;
}

} // namespace idian
