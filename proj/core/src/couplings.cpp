#include "flowlab/couplings.hpp"

#include <cstring>
#include <fstream>

#include "flowlab/error.hpp"

namespace flowlab::coupling {

std::size_t PairStore::dim() const {
    if (n_backward() > 0) return backward_x0.cols();
    if (n_forward() > 0) return forward_x0.cols();
    return 0;
}

void PairStore::validate() const {
    if (rho < 0.0 || rho > 1.0) throw config_error("pairs: rho must lie in [0, 1]");
    if (n_backward() > 0) check_same_shape(backward_x0, backward_x1, "pairs.backward");
    if (n_forward() > 0) check_same_shape(forward_x0, forward_x1, "pairs.forward");
    if (n_backward() > 0 && n_forward() > 0 && backward_x0.cols() != forward_x0.cols()) {
        throw shape_error("pairs: backward/forward dimension mismatch");
    }
}

PairStore independent_coupling(const data::DataSampler& dataset, std::size_t n, Rng& rng) {
    PairStore store;
    store.backward_x0 = dataset.sample(n, rng);
    store.backward_x1 = data::sample_noise(n, dataset.dim(), rng);
    store.rho = 0.0;
    return store;
}

namespace {

Tensor keep_finite_rows(const Tensor& a, const std::vector<std::uint8_t>& finite,
                        std::size_t kept) {
    const std::size_t d = a.cols();
    Tensor out({kept, d});
    std::size_t w = 0;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        if (!finite[i]) continue;
        for (std::size_t j = 0; j < d; ++j) out[w * d + j] = a[i * d + j];
        ++w;
    }
    return out;
}

}  // namespace

PairGenResult generate_backward_pairs(const ode::VelocityField& field, std::size_t n,
                                      const ode::SolverCfg& solver_cfg, Rng& rng,
                                      double max_drop_rate) {
    if (n == 0) throw error("generate_backward_pairs: n must be >= 1");
    ode::SolverCfg cfg = solver_cfg;
    cfg.forward = false;
    cfg.record_trajectory = false;

    Tensor x1 = data::sample_noise(n, field.dim(), rng);
    ode::SolveResult res = ode::solve_flagging_nonfinite(x1, field, cfg);

    PairGenResult out;
    out.requested = n;
    out.dropped = res.n_nonfinite;
    if (static_cast<double>(out.dropped) > max_drop_rate * static_cast<double>(n)) {
        throw numeric_error("generate_backward_pairs: dropped " + std::to_string(out.dropped) +
                            " of " + std::to_string(n) + " pairs (non-finite solves)");
    }
    const std::size_t kept = n - out.dropped;
    out.store.backward_x0 = keep_finite_rows(res.terminal, res.finite, kept);
    out.store.backward_x1 = keep_finite_rows(x1, res.finite, kept);
    out.store.rho = 0.0;
    return out;
}

PairGenResult generate_forward_pairs(const ode::VelocityField& field, const Tensor& dataset,
                                     const ode::SolverCfg& solver_cfg, double max_drop_rate) {
    const std::size_t n = dataset.rows();
    if (n == 0) throw error("generate_forward_pairs: empty dataset");
    ode::SolverCfg cfg = solver_cfg;
    cfg.forward = true;
    cfg.record_trajectory = false;

    ode::SolveResult res = ode::solve_flagging_nonfinite(dataset, field, cfg);

    PairGenResult out;
    out.requested = n;
    out.dropped = res.n_nonfinite;
    if (static_cast<double>(out.dropped) > max_drop_rate * static_cast<double>(n)) {
        throw numeric_error("generate_forward_pairs: dropped " + std::to_string(out.dropped) +
                            " of " + std::to_string(n) + " pairs (non-finite solves)");
    }
    const std::size_t kept = n - out.dropped;
    out.store.forward_x0 = keep_finite_rows(dataset, res.finite, kept);
    out.store.forward_x1 = keep_finite_rows(res.terminal, res.finite, kept);
    out.store.rho = 1.0;
    return out;
}

void sample_pairs(const PairStore& store, std::size_t batch, Rng& rng, Tensor& x0, Tensor& x1) {
    store.validate();
    const double rho = store.rho;
    if (rho > 0.0 && store.n_forward() == 0) {
        throw error("sample_pairs: rho > 0 but the forward pool is empty");
    }
    if (rho < 1.0 && store.n_backward() == 0) {
        throw error("sample_pairs: rho < 1 but the backward pool is empty");
    }
    const std::size_t d = store.dim();
    x0 = Tensor({batch, d});
    x1 = Tensor({batch, d});
    for (std::size_t s = 0; s < batch; ++s) {
        const bool forward = rho >= 1.0 || (rho > 0.0 && rng.uniform() < rho);
        const Tensor& src0 = forward ? store.forward_x0 : store.backward_x0;
        const Tensor& src1 = forward ? store.forward_x1 : store.backward_x1;
        const std::size_t i = rng.index(src0.rows());
        for (std::size_t j = 0; j < d; ++j) {
            x0[s * d + j] = src0[i * d + j];
            x1[s * d + j] = src1[i * d + j];
        }
    }
}

// --- binary persistence ------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'F', 'L', 'P', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw error("load_pairs: truncated file");
    return v;
}

void write_array(std::ofstream& os, const Tensor& t) {
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_array(std::ifstream& is, std::size_t rows, std::size_t d) {
    Tensor t({rows, d});
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!is) throw error("load_pairs: truncated array");
    return t;
}

}  // namespace

void save_pairs(const std::string& path, const PairStore& store) {
    store.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw error("save_pairs: cannot open " + path);
    os.write(kMagic, 4);
    write_pod(os, kVersion);
    write_pod(os, static_cast<std::uint32_t>(store.dim()));
    write_pod(os, static_cast<std::uint64_t>(store.n_backward()));
    write_pod(os, static_cast<std::uint64_t>(store.n_forward()));
    write_pod(os, store.rho);
    write_pod(os, store.teacher_hash);
    if (store.n_backward() > 0) {
        write_array(os, store.backward_x0);
        write_array(os, store.backward_x1);
    }
    if (store.n_forward() > 0) {
        write_array(os, store.forward_x0);
        write_array(os, store.forward_x1);
    }
}

PairStore load_pairs(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw error("load_pairs: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0) {
        throw error("load_pairs: not a pair-store file: " + path);
    }
    const auto version = read_pod<std::uint32_t>(is);
    if (version != kVersion) throw error("load_pairs: unsupported version");
    const auto dim = read_pod<std::uint32_t>(is);
    const auto nb = read_pod<std::uint64_t>(is);
    const auto nf = read_pod<std::uint64_t>(is);
    PairStore store;
    store.rho = read_pod<double>(is);
    store.teacher_hash = read_pod<std::uint64_t>(is);
    if (nb > 0) {
        store.backward_x0 = read_array(is, nb, dim);
        store.backward_x1 = read_array(is, nb, dim);
    }
    if (nf > 0) {
        store.forward_x0 = read_array(is, nf, dim);
        store.forward_x1 = read_array(is, nf, dim);
    }
    store.validate();
    return store;
}

}  // namespace flowlab::coupling
