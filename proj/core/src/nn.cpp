#include "flowlab/nn.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "flowlab/error.hpp"
#include "flowlab/precond.hpp"
#include "json_io.hpp"

namespace flowlab::nn {

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::silu: return "silu";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
    }
    return "silu";
}

Activation activation_from_name(const std::string& name) {
    if (name == "silu") return Activation::silu;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    throw config_error("unknown activation: " + name);
}

void TimeEmbedding::write(double t, double* out) const {
    out[0] = t;
    for (std::size_t k = 0; k < freqs; ++k) {
        const double f =
            freqs > 1 ? std::pow(base, static_cast<double>(k) / static_cast<double>(freqs - 1))
                      : 1.0;
        const double arg = 2.0 * M_PI * f * t;
        out[1 + 2 * k] = std::sin(arg);
        out[2 + 2 * k] = std::cos(arg);
    }
}

void DenoiserConfig::validate() const {
    if (data_dim == 0) throw config_error("model.data_dim: must be positive");
    if (hidden.empty()) throw config_error("model.hidden: at least one hidden layer required");
    for (std::size_t h : hidden) {
        if (h == 0) throw config_error("model.hidden: layer widths must be positive");
    }
    if (dropout_p < 0.0 || dropout_p > 0.5) {
        throw config_error("model.dropout: must be in [0, 0.5]");
    }
    if (time_embed.freqs == 0) throw config_error("model.time_freqs: must be positive");
    if (time_embed.base <= 0.0) throw config_error("model.time_base: must be positive");
    if (preconditioned && sigma_data <= 0.0) {
        throw config_error("model.sigma_data: must be positive when preconditioned");
    }
}

Tensor velocity_from_denoised(const Tensor& x_t, const Tensor& denoised, const Tensor& t,
                              VelocityDiag* diag) {
    check_same_shape(x_t, denoised, "velocity");
    if (t.rank() != 1 || t.size() != x_t.rows()) {
        throw shape_error("velocity: t must be rank 1 with one entry per row");
    }
    const std::size_t m = x_t.rows(), d = x_t.cols();
    Tensor v({m, d});
    for (std::size_t i = 0; i < m; ++i) {
        double ti = t[i];
        if (ti < kVelocityTimeFloor) {
            ti = kVelocityTimeFloor;
            if (diag) ++diag->clamped;
        }
        const double inv_t = 1.0 / ti;
        for (std::size_t j = 0; j < d; ++j) {
            v[i * d + j] = (x_t[i * d + j] - denoised[i * d + j]) * inv_t;
        }
    }
    return v;
}

namespace {

precond::BridgeSpec fm_bridge(double sigma_data) {
    return precond::flow_matching_bridge(sigma_data * sigma_data);
}

}  // namespace

Denoiser::Denoiser(DenoiserConfig cfg, Rng& init_rng) : cfg_(std::move(cfg)) {
    cfg_.validate();
    std::vector<std::size_t> widths;
    widths.push_back(cfg_.input_dim());
    for (std::size_t h : cfg_.hidden) widths.push_back(h);
    widths.push_back(cfg_.data_dim);

    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t fan_in = widths[l], fan_out = widths[l + 1];
        const bool is_output = (l + 2 == widths.size());
        Tensor w({fan_in, fan_out});
        if (!is_output || !cfg_.zero_init_output) {
            const double gain = cfg_.activation == Activation::relu ? 2.0 : 1.0;
            const double std = std::sqrt(gain / static_cast<double>(fan_in));
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = init_rng.normal(0.0, std);
        }
        Tensor b({fan_out});
        params_.push_back(ad::Var::leaf(std::move(w), true));
        param_names_.push_back("w" + std::to_string(l));
        params_.push_back(ad::Var::leaf(std::move(b), true));
        param_names_.push_back("b" + std::to_string(l));
    }
}

std::size_t Denoiser::param_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.value().size();
    return n;
}

Tensor Denoiser::assemble_input(const Tensor& x_t, const Tensor& t, const Tensor* label,
                                Tensor* c_skip_col, Tensor* c_out_col) const {
    if (x_t.rank() != 2 || x_t.cols() != cfg_.data_dim) {
        throw shape_error("denoiser: x_t must be [batch, " + std::to_string(cfg_.data_dim) +
                          "], got " + x_t.shape_str());
    }
    const std::size_t m = x_t.rows();
    if (t.rank() != 1 || t.size() != m) {
        throw shape_error("denoiser: t must be [batch], got " + t.shape_str());
    }
    if (cfg_.label_dim > 0) {
        if (!label) throw shape_error("denoiser: label required (label_dim > 0)");
        if (label->rank() != 2 || label->rows() != m || label->cols() != cfg_.label_dim) {
            throw shape_error("denoiser: label must be [batch, " +
                              std::to_string(cfg_.label_dim) + "], got " + label->shape_str());
        }
    } else if (label && label->size() > 0) {
        throw shape_error("denoiser: unexpected label for unconditional model");
    }
    check_finite(x_t, "denoiser input x_t");
    check_finite(t, "denoiser input t");

    const std::size_t d = cfg_.data_dim;
    const std::size_t te = cfg_.time_embed.dim();
    const std::size_t in = cfg_.input_dim();
    Tensor X({m, in});

    const auto bridge = fm_bridge(cfg_.sigma_data);
    if (cfg_.preconditioned) {
        *c_skip_col = Tensor({m});
        *c_out_col = Tensor({m});
    }
    for (std::size_t i = 0; i < m; ++i) {
        double cin = 1.0;
        if (cfg_.preconditioned) {
            const double ti = t[i];
            cin = precond::c_in(bridge, ti);
            (*c_skip_col)[i] = precond::c_skip(bridge, ti);
            (*c_out_col)[i] = precond::c_out(bridge, ti);
        }
        double* xi = X.data() + i * in;
        for (std::size_t j = 0; j < d; ++j) xi[j] = cin * x_t[i * d + j];
        cfg_.time_embed.write(t[i], xi + d);
        if (cfg_.label_dim > 0) {
            const double* li = label->data() + i * cfg_.label_dim;
            for (std::size_t j = 0; j < cfg_.label_dim; ++j) xi[d + te + j] = li[j];
        }
    }
    return X;
}

Tensor Denoiser::denoise(const Tensor& x_t, const Tensor& t, const Tensor* label, bool training,
                         Rng* rng) const {
    Tensor c_skip_col, c_out_col;
    Tensor h = assemble_input(x_t, t, label, &c_skip_col, &c_out_col);
    const bool drop = training && cfg_.dropout_p > 0.0;
    if (drop && !rng) throw error("denoiser: training-mode dropout needs an rng");

    const std::size_t n_layers = params_.size() / 2;
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Tensor& w = params_[2 * l].value();
        const Tensor& b = params_[2 * l + 1].value();
        const std::size_t m = h.rows(), k = h.cols(), n = w.cols();
        Tensor out({m, n});
        for (std::size_t i = 0; i < m; ++i) {
            double* oi = out.data() + i * n;
            for (std::size_t j = 0; j < n; ++j) oi[j] = b[j];
            const double* hi = h.data() + i * k;
            for (std::size_t x = 0; x < k; ++x) {
                const double hx = hi[x];
                if (hx == 0.0) continue;
                const double* wx = w.data() + x * n;
                for (std::size_t j = 0; j < n; ++j) oi[j] += hx * wx[j];
            }
        }
        const bool is_output = (l + 1 == n_layers);
        if (!is_output) {
            for (std::size_t i = 0; i < out.size(); ++i) {
                double v = out[i];
                switch (cfg_.activation) {
                    case Activation::silu: v = v / (1.0 + std::exp(-v)); break;
                    case Activation::relu: v = v > 0.0 ? v : 0.0; break;
                    case Activation::tanh: v = std::tanh(v); break;
                }
                out[i] = v;
            }
            if (drop) {
                const double p = cfg_.dropout_p;
                const double inv_keep = 1.0 / (1.0 - p);
                for (std::size_t i = 0; i < out.size(); ++i) {
                    out[i] *= rng->uniform() < p ? 0.0 : inv_keep;
                }
            }
        }
        h = std::move(out);
    }

    if (cfg_.preconditioned) {
        const std::size_t m = h.rows(), d = h.cols();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                h[i * d + j] = c_skip_col[i] * x_t[i * d + j] + c_out_col[i] * h[i * d + j];
            }
        }
    }
    check_finite(h, "denoiser output");
    return h;
}

ad::Var Denoiser::denoise_train(const Tensor& x_t, const Tensor& t, const Tensor* label,
                                bool training, Rng& rng) {
    Tensor c_skip_col, c_out_col;
    Tensor X = assemble_input(x_t, t, label, &c_skip_col, &c_out_col);
    ad::Var h = ad::Var::constant(std::move(X));

    const bool drop = training && cfg_.dropout_p > 0.0;
    const std::size_t n_layers = params_.size() / 2;
    for (std::size_t l = 0; l < n_layers; ++l) {
        h = ad::add_rowvec(ad::matmul(h, params_[2 * l]), params_[2 * l + 1]);
        const bool is_output = (l + 1 == n_layers);
        if (!is_output) {
            switch (cfg_.activation) {
                case Activation::silu: h = ad::silu(h); break;
                case Activation::relu: h = ad::relu(h); break;
                case Activation::tanh: h = ad::tanh_(h); break;
            }
            if (drop) h = ad::dropout(h, cfg_.dropout_p, rng);
        }
    }

    if (cfg_.preconditioned) {
        Tensor skip(x_t.shape());
        const std::size_t m = x_t.rows(), d = x_t.cols();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < d; ++j) skip[i * d + j] = c_skip_col[i] * x_t[i * d + j];
        }
        h = ad::add_const(ad::scale_rows(h, c_out_col), skip);
    }
    return h;
}

Tensor Denoiser::velocity(const Tensor& x_t, const Tensor& t, const Tensor* label,
                          VelocityDiag* diag) const {
    // Clamp t once so the same floored time feeds both the net input and
    // the 1/t factor; below the floor the field is constant in t.
    Tensor tc = t;
    for (std::size_t i = 0; i < tc.size(); ++i) {
        if (tc[i] < kVelocityTimeFloor) {
            tc[i] = kVelocityTimeFloor;
            if (diag) ++diag->clamped;
        }
    }
    return velocity_from_denoised(x_t, denoise(x_t, tc, label), tc, nullptr);
}

void Denoiser::copy_params_from(const Denoiser& other) {
    if (other.params_.size() != params_.size()) {
        throw shape_error("copy_params_from: parameter count mismatch");
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        check_same_shape(params_[i].value(), other.params_[i].value(), "copy_params_from");
        params_[i].mutable_value() = other.params_[i].value();
    }
}

std::vector<Tensor> Denoiser::snapshot_params() const {
    std::vector<Tensor> out;
    out.reserve(params_.size());
    for (const auto& p : params_) out.push_back(p.value());
    return out;
}

void Denoiser::load_params(const std::vector<Tensor>& values) {
    if (values.size() != params_.size()) {
        throw shape_error("load_params: expected " + std::to_string(params_.size()) +
                          " tensors, got " + std::to_string(values.size()));
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        check_same_shape(params_[i].value(), values[i], "load_params");
        params_[i].mutable_value() = values[i];
    }
}

std::uint64_t Denoiser::param_hash() const {
    // FNV-1a over the raw bytes of all parameters in declaration order.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : params_) {
        const Tensor& v = p.value();
        const unsigned char* bytes = reinterpret_cast<const unsigned char*>(v.data());
        const std::size_t n = v.size() * sizeof(double);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= bytes[i];
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

// --- checkpoints -----------------------------------------------------------

void save_checkpoint(const std::string& path, const Denoiser& d,
                     const std::vector<Tensor>* ema) {
    json j;
    j["format"] = "flowlab-checkpoint";
    j["version"] = 1;
    j["model"] = denoiser_config_to_json(d.config());
    json params = json::array();
    const auto& names = d.param_names();
    for (std::size_t i = 0; i < d.params().size(); ++i) {
        json p = tensor_to_json(d.params()[i].value());
        p["name"] = names[i];
        params.push_back(std::move(p));
    }
    j["params"] = std::move(params);
    if (ema) {
        json e = json::array();
        for (const Tensor& t : *ema) e.push_back(tensor_to_json(t));
        j["ema"] = std::move(e);
    }
    std::ofstream os(path);
    if (!os) throw error("save_checkpoint: cannot open " + path);
    os << j.dump(1) << "\n";
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw error("load_checkpoint: cannot open " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw error("load_checkpoint: invalid JSON in " + path + ": " + e.what());
    }
    if (j.value("format", "") != "flowlab-checkpoint") {
        throw error("load_checkpoint: not a checkpoint file: " + path);
    }
    if (j.value("version", 0) != 1) {
        throw error("load_checkpoint: unsupported version in " + path);
    }
    Checkpoint out;
    out.config = denoiser_config_from_json(j.at("model"));
    for (const auto& p : j.at("params")) out.params.push_back(tensor_from_json(p));
    if (j.contains("ema")) {
        for (const auto& p : j.at("ema")) out.ema.push_back(tensor_from_json(p));
    }
    return out;
}

Denoiser denoiser_from_checkpoint(const Checkpoint& ckpt, bool use_ema) {
    Rng dummy(0);
    Denoiser d(ckpt.config, dummy);
    if (use_ema) {
        if (ckpt.ema.empty()) throw error("checkpoint has no EMA parameters");
        d.load_params(ckpt.ema);
    } else {
        d.load_params(ckpt.params);
    }
    return d;
}

}  // namespace flowlab::nn

namespace flowlab {

json denoiser_config_to_json(const nn::DenoiserConfig& cfg) {
    json j;
    j["data_dim"] = cfg.data_dim;
    j["hidden"] = cfg.hidden;
    j["activation"] = nn::activation_name(cfg.activation);
    j["time_freqs"] = cfg.time_embed.freqs;
    j["time_base"] = cfg.time_embed.base;
    j["dropout"] = cfg.dropout_p;
    j["label_dim"] = cfg.label_dim;
    j["zero_init_output"] = cfg.zero_init_output;
    j["preconditioned"] = cfg.preconditioned;
    j["sigma_data"] = cfg.sigma_data;
    return j;
}

nn::DenoiserConfig denoiser_config_from_json(const json& j) {
    nn::DenoiserConfig cfg;
    cfg.data_dim = j.value("data_dim", cfg.data_dim);
    if (j.contains("hidden")) cfg.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    cfg.activation = nn::activation_from_name(j.value("activation", "silu"));
    cfg.time_embed.freqs = j.value("time_freqs", cfg.time_embed.freqs);
    cfg.time_embed.base = j.value("time_base", cfg.time_embed.base);
    cfg.dropout_p = j.value("dropout", cfg.dropout_p);
    cfg.label_dim = j.value("label_dim", cfg.label_dim);
    cfg.zero_init_output = j.value("zero_init_output", cfg.zero_init_output);
    cfg.preconditioned = j.value("preconditioned", cfg.preconditioned);
    cfg.sigma_data = j.value("sigma_data", cfg.sigma_data);
    cfg.validate();
    return cfg;
}

json tensor_to_json(const Tensor& t) {
    json j;
    j["shape"] = t.shape();
    j["data"] = t.storage();
    return j;
}

Tensor tensor_from_json(const json& j) {
    auto shape = j.at("shape").get<std::vector<std::size_t>>();
    auto data = j.at("data").get<std::vector<double>>();
    if (data.size() != shape_product(shape)) {
        throw error("tensor_from_json: data length does not match shape manifest");
    }
    return Tensor(std::move(shape), std::move(data));
}

}  // namespace flowlab
