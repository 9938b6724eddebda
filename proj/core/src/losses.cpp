#include "flowlab/losses.hpp"

#include <algorithm>
#include <cmath>

#include "flowlab/error.hpp"

namespace flowlab::loss {

Tensor interpolate(const Tensor& x0, const Tensor& x1, const Tensor& t) {
    check_same_shape(x0, x1, "interpolate");
    const std::size_t m = x0.rows(), d = x0.cols();
    if (t.rank() != 1 || t.size() != m) {
        throw shape_error("interpolate: t must be [batch], got " + t.shape_str());
    }
    Tensor out({m, d});
    for (std::size_t i = 0; i < m; ++i) {
        const double ti = t[i];
        if (ti < 0.0 || ti > 1.0) {
            throw numeric_error("interpolate: t out of [0, 1] at sample " + std::to_string(i));
        }
        for (std::size_t j = 0; j < d; ++j) {
            out[i * d + j] = (1.0 - ti) * x0[i * d + j] + ti * x1[i * d + j];
        }
    }
    return out;
}

Tensor sample_times(const TimeDist& dist, std::size_t n, Rng& rng, double t_min, double t_max) {
    Tensor t({n});
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = std::clamp(dist.sample(rng), t_min, t_max);
    }
    return t;
}

// --- tracker ----------------------------------------------------------------

namespace {

struct TrackerArch {
    std::size_t data_dim;
    nn::TimeEmbedding embed{6, 64.0};
    std::size_t input_dim() const { return data_dim + embed.dim(); }
};

}  // namespace

// Hand-rolled 2-hidden-layer MLP with a scalar head; the output layer is
// zero-initialized so the initial weight exp(-f) is exactly 1.
TrackerNet::TrackerNet(std::size_t data_dim, std::size_t hidden, Rng& rng)
    : net_([&] {
          nn::DenoiserConfig cfg;
          cfg.data_dim = data_dim;
          cfg.hidden = {hidden, hidden};
          cfg.activation = nn::Activation::silu;
          cfg.time_embed = nn::TimeEmbedding{6, 64.0};
          cfg.zero_init_output = true;
          return cfg;
      }(),
      rng) {}

ad::Var TrackerNet::forward_train(const Tensor& x_t, const Tensor& t) {
    Rng unused(0);
    // Multi-output head collapsed to a scalar per sample by averaging;
    // with a zero-initialized head this starts at exactly f = 0.
    ad::Var out = net_.denoise_train(x_t, t, nullptr, false, unused);
    return ad::scale(ad::sum_rows(out), 1.0 / static_cast<double>(net_.data_dim()));
}

Tensor TrackerNet::forward(const Tensor& x_t, const Tensor& t) const {
    Tensor out = net_.denoise(x_t, t);
    const std::size_t m = out.rows(), d = out.cols();
    Tensor f({m});
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < d; ++j) acc += out[i * d + j];
        f[i] = acc / static_cast<double>(d);
    }
    return f;
}

double tracker_objective(double f, double l) {
    return std::exp(-f) * l + f;
}

// --- weight rules ------------------------------------------------------------

const char* weight_kind_name(WeightKind k) {
    switch (k) {
        case WeightKind::one: return "one";
        case WeightKind::inv_t: return "inv_t";
        case WeightKind::inv_t2: return "inv_t2";
        case WeightKind::edm: return "edm";
        case WeightKind::batch_norm: return "batch_norm";
        case WeightKind::tracker: return "tracker";
    }
    return "one";
}

WeightKind weight_kind_from_name(const std::string& name) {
    if (name == "one") return WeightKind::one;
    if (name == "inv_t") return WeightKind::inv_t;
    if (name == "inv_t2") return WeightKind::inv_t2;
    if (name == "edm") return WeightKind::edm;
    if (name == "batch_norm") return WeightKind::batch_norm;
    if (name == "tracker") return WeightKind::tracker;
    throw config_error("unknown weight rule: " + name);
}

WeightRule WeightRule::one() {
    return WeightRule{};
}

WeightRule WeightRule::inv_t() {
    WeightRule r;
    r.kind_ = WeightKind::inv_t;
    return r;
}

WeightRule WeightRule::inv_t2() {
    WeightRule r;
    r.kind_ = WeightKind::inv_t2;
    return r;
}

WeightRule WeightRule::edm() {
    WeightRule r;
    r.kind_ = WeightKind::edm;
    return r;
}

WeightRule WeightRule::batch_norm() {
    WeightRule r;
    r.kind_ = WeightKind::batch_norm;
    r.bins_.fill(1.0);
    return r;
}

WeightRule WeightRule::tracker(std::size_t data_dim, std::size_t hidden, Rng& rng) {
    if (hidden == 0) throw config_error("weight.tracker_hidden: must be positive");
    WeightRule r;
    r.kind_ = WeightKind::tracker;
    r.tracker_ = std::make_shared<TrackerNet>(data_dim, hidden, rng);
    return r;
}

TrackerNet& WeightRule::tracker_net() {
    if (!tracker_) throw config_error("weight rule has no tracker net");
    return *tracker_;
}

const TrackerNet& WeightRule::tracker_net() const {
    if (!tracker_) throw config_error("weight rule has no tracker net");
    return *tracker_;
}

namespace {

double stateless_weight(WeightKind kind, double t) {
    if (t <= 0.0 || t >= 1.0) {
        throw numeric_error("weight rule: t must lie strictly inside (0, 1)");
    }
    switch (kind) {
        case WeightKind::one: return 1.0;
        case WeightKind::inv_t: return 1.0 / t;
        case WeightKind::inv_t2: return 1.0 / (t * t);
        case WeightKind::edm: {
            const double sigma = t / (1.0 - t);
            return (sigma * sigma + 0.25) / (0.25 * sigma * sigma);
        }
        default: break;
    }
    throw error("stateless_weight: rule is stateful");
}

std::size_t bin_of(double t) {
    const auto b = static_cast<std::size_t>(t * static_cast<double>(WeightRule::kBins));
    return std::min(b, WeightRule::kBins - 1);
}

}  // namespace

Tensor WeightRule::weights(const Tensor& t, const Tensor& detached_loss) {
    const std::size_t m = t.size();
    Tensor w({m});
    switch (kind_) {
        case WeightKind::one:
        case WeightKind::inv_t:
        case WeightKind::inv_t2:
        case WeightKind::edm:
            for (std::size_t i = 0; i < m; ++i) w[i] = stateless_weight(kind_, t[i]);
            break;
        case WeightKind::batch_norm: {
            // Weigh with the current running means, then fold the batch in.
            for (std::size_t i = 0; i < m; ++i) {
                w[i] = 1.0 / std::max(bins_[bin_of(t[i])], 1e-8);
            }
            if (detached_loss.size() != m) {
                throw shape_error("batch_norm weights: loss vector size mismatch");
            }
            for (std::size_t i = 0; i < m; ++i) {
                double& b = bins_[bin_of(t[i])];
                b = kBinDecay * b + (1.0 - kBinDecay) * detached_loss[i];
            }
            break;
        }
        case WeightKind::tracker:
            throw error("WeightRule::weights: tracker weights come from the joint objective");
    }
    return w;
}

double WeightRule::weight_at(const Tensor& x_t_row, double t) const {
    switch (kind_) {
        case WeightKind::batch_norm:
            return 1.0 / std::max(bins_[bin_of(t)], 1e-8);
        case WeightKind::tracker: {
            Tensor x({1, x_t_row.size()}, std::vector<double>(x_t_row.storage()));
            Tensor tv({1}, {t});
            return std::exp(-tracker_->forward(x, tv)[0]);
        }
        default:
            return stateless_weight(kind_, t);
    }
}

std::vector<ad::Var> WeightRule::trainable_params() {
    if (tracker_) return tracker_->params();
    return {};
}

// --- weighted batch loss ------------------------------------------------------

BatchLossResult weighted_batch_loss(nn::Denoiser& d, const Tensor& x0, const Tensor& x1,
                                    const Tensor& t, WeightRule& rule, const LossMap& map,
                                    bool training, Rng& rng, const Tensor* label) {
    const std::size_t m = x0.rows();
    if (m == 0) throw error("weighted_batch_loss: empty batch");
    Tensor x_t = interpolate(x0, x1, t);
    ad::Var denoised = d.denoise_train(x_t, t, label, training, rng);
    ad::Var l = map.per_sample(denoised, x0, t);

    BatchLossResult res;
    res.t = t;
    const Tensor l_detached = l.value();
    double raw = 0.0;
    for (std::size_t i = 0; i < m; ++i) raw += l_detached[i];
    res.raw_loss = raw / static_cast<double>(m);

    if (rule.kind() == WeightKind::tracker) {
        ad::Var f = rule.tracker_net().forward_train(x_t, t);
        ad::Var w = ad::exp_(ad::neg(f));
        // exp(-f) l + f: l's gradient is scaled by the weight, f's
        // stationary point is log(l).
        res.objective = ad::mean_all(ad::add(ad::mul(w, l), f));
        res.weights = w.value();
    } else {
        res.weights = rule.weights(t, l_detached);
        res.objective = ad::mean_all(ad::mul_const(l, res.weights));
    }
    double wl = 0.0;
    for (std::size_t i = 0; i < m; ++i) wl += res.weights[i] * l_detached[i];
    res.weighted_loss = wl / static_cast<double>(m);
    return res;
}

BatchLossResult weighted_batch_loss(nn::Denoiser& d, const Tensor& x0, const Tensor& x1,
                                    WeightRule& rule, const TimeDist& dist, const LossMap& map,
                                    bool training, Rng& rng, const Tensor* label) {
    Tensor t = sample_times(dist, x0.rows(), rng);
    return weighted_batch_loss(d, x0, x1, t, rule, map, training, rng, label);
}

double LossSpread::ratio() const {
    if (min <= 0.0) throw numeric_error("loss spread ratio: minimum loss is not positive");
    return max / min;
}

LossSpread relative_loss_diagnostic(const nn::Denoiser& d, const Tensor& x0, const Tensor& x1,
                                    double t, const LossMap& map) {
    const std::size_t m = x0.rows();
    if (m < 2) throw error("relative_loss_diagnostic: need at least 2 pairs");
    Tensor tv = Tensor::full({m}, t);
    Tensor x_t = interpolate(x0, x1, tv);
    Tensor denoised = d.denoise(x_t, tv);
    Tensor l = map.per_sample_value(denoised, x0, tv);
    LossSpread s;
    s.min = l[0];
    s.max = l[0];
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        s.min = std::min(s.min, l[i]);
        s.max = std::max(s.max, l[i]);
        acc += l[i];
    }
    s.mean = acc / static_cast<double>(m);
    return s;
}

}  // namespace flowlab::loss
