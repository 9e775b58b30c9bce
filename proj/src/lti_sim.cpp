#include "zsirl/lti_sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "csv_util.hpp"
#include "zsirl/matrix_ops.hpp"

namespace zsirl {

namespace {

std::uint64_t splitmix64(std::uint64_t v) {
    v += 0x9e3779b97f4a7c15ULL;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
    return v ^ (v >> 31);
}

// Counter-based uniform draw in [0, 1); independent of call order.
double uniform01(std::uint64_t seed, std::uint64_t index, std::uint64_t component) {
    const std::uint64_t h = splitmix64(splitmix64(splitmix64(seed) ^ index) ^ component);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

int steps_per_window(double T_window, double h) {
    if (!(h > 0.0) || !(T_window > 0.0)) {
        throw std::invalid_argument("batch collection: T_window and h must be positive");
    }
    const double ratio = T_window / h;
    const int steps = static_cast<int>(std::llround(ratio));
    if (steps < 1 || std::abs(ratio - steps) > 1e-9 * ratio) {
        throw std::invalid_argument(
            "batch collection: T_window must be an integer multiple of h");
    }
    return steps;
}

void check_state(const Eigen::VectorXd& x, double t) {
    if (!x.allFinite() || x.norm() > kStateBlowup) {
        std::ostringstream msg;
        msg << "simulation diverged at t = " << t << " (|x| = " << x.norm() << ")";
        throw DivergenceError(msg.str());
    }
}

struct WindowAccumulator {
    Eigen::VectorXd i_xx, i_xu, i_xd, i_xe, i_vv;

    void reset(int n, int m, int z, bool expert) {
        i_xx = Eigen::VectorXd::Zero(packed_size(n));
        i_xu = Eigen::VectorXd::Zero(n * m);
        i_xd = Eigen::VectorXd::Zero(n * z);
        if (expert) {
            i_xe = Eigen::VectorXd::Zero(n * m);
            i_vv = Eigen::VectorXd::Zero(packed_size(m));
        }
    }

    // Trapezoid contribution of one sub-step; the held inputs enter at both
    // the start and end state.
    void add_step(double h, const Eigen::VectorXd& x0, const Eigen::VectorXd& x1,
                  const Eigen::VectorXd& u, const Eigen::VectorXd& d, const Eigen::VectorXd* e) {
        const double w = 0.5 * h;
        i_xx += w * (quad_basis(x0) + quad_basis(x1));
        i_xu += w * (kron_vec(x0, u) + kron_vec(x1, u));
        i_xd += w * (kron_vec(x0, d) + kron_vec(x1, d));
        if (e != nullptr) {
            i_xe += w * (kron_vec(x0, *e) + kron_vec(x1, *e));
            i_vv += h * quad_basis(u - *e);  // constant within the step
        }
    }
};

DataBatch collect_batch(const SystemDynamics& dyn, const Eigen::MatrixXd& K,
                        const SignalSpec* noise, const SignalSpec& disturbance, double T_window,
                        int window_count, double h, const Eigen::VectorXd& x0, BatchRole role) {
    dyn.validate();
    disturbance.validate();
    const int n = dyn.n();
    const int m = dyn.m();
    const int z = dyn.z();
    if (K.rows() != m || K.cols() != n) {
        throw std::invalid_argument("batch collection: gain must be m x n");
    }
    if (x0.size() != n) {
        throw std::invalid_argument("batch collection: x0 must have length n");
    }
    const bool expert = role == BatchRole::Expert;
    if (expert) {
        noise->validate();
    }

    DataBatch batch;
    batch.n = n;
    batch.m = m;
    batch.z = z;
    batch.T_window = T_window;
    batch.role = role;
    if (window_count < batch.required_windows()) {
        std::ostringstream msg;
        msg << "batch collection: " << window_count << " windows is below the rank-condition "
            << "minimum " << batch.required_windows();
        throw std::invalid_argument(msg.str());
    }

    const int steps = steps_per_window(T_window, h);
    Eigen::VectorXd x = x0;
    std::uint64_t sample = 0;
    WindowAccumulator acc;

    batch.windows.reserve(window_count);
    for (int w = 0; w < window_count; ++w) {
        BatchWindow win;
        win.start_state = x;
        acc.reset(n, m, z, expert);
        for (int s = 0; s < steps; ++s) {
            const double t = static_cast<double>(sample) * h;
            const Eigen::VectorXd d = sample_signal(disturbance, t, sample, z);
            Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
            if (expert) {
                e = sample_signal(*noise, t, sample, m);
            }
            const Eigen::VectorXd u = -K * x + e;
            const Eigen::VectorXd x_next = rk4_step(dyn, x, u, d, h);
            check_state(x_next, t + h);
            acc.add_step(h, x, x_next, u, d, expert ? &e : nullptr);
            x = x_next;
            ++sample;
        }
        win.end_state = x;
        win.d_xx = quad_basis(win.end_state) - quad_basis(win.start_state);
        win.i_xx = acc.i_xx;
        win.i_xu = acc.i_xu;
        win.i_xd = acc.i_xd;
        if (expert) {
            win.i_xe = acc.i_xe;
            win.i_vv = acc.i_vv;
        }
        batch.windows.push_back(std::move(win));
    }
    return batch;
}

}  // namespace

SignalSpec SignalSpec::zero() { return SignalSpec{}; }

SignalSpec SignalSpec::uniform_random(double amplitude, std::uint64_t seed) {
    SignalSpec s;
    s.kind = SignalKind::UniformRandom;
    s.amplitude = amplitude;
    s.seed = seed;
    return s;
}

SignalSpec SignalSpec::sinusoid_sum(double amplitude, std::vector<double> frequencies) {
    SignalSpec s;
    s.kind = SignalKind::SinusoidSum;
    s.amplitude = amplitude;
    s.frequencies = std::move(frequencies);
    return s;
}

void SignalSpec::validate() const {
    if (amplitude < 0.0 || !std::isfinite(amplitude)) {
        throw std::invalid_argument("signal: amplitude must be finite and >= 0");
    }
    if (kind == SignalKind::SinusoidSum) {
        if (frequencies.empty()) {
            throw std::invalid_argument("signal: sinusoid sum needs at least one frequency");
        }
        std::set<double> seen;
        for (double f : frequencies) {
            if (!(f > 0.0) || !std::isfinite(f)) {
                throw std::invalid_argument("signal: frequencies must be positive");
            }
            if (!seen.insert(f).second) {
                throw std::invalid_argument("signal: frequencies must be distinct");
            }
        }
    }
}

Eigen::VectorXd sample_signal(const SignalSpec& spec, double t, std::uint64_t sample_index,
                              int dim) {
    if (dim < 1) {
        throw std::invalid_argument("sample_signal: dimension must be >= 1");
    }
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dim);
    switch (spec.kind) {
        case SignalKind::Zero:
            break;
        case SignalKind::UniformRandom:
            for (int c = 0; c < dim; ++c) {
                out[c] = spec.amplitude *
                         uniform01(spec.seed, sample_index, static_cast<std::uint64_t>(c));
            }
            break;
        case SignalKind::SinusoidSum: {
            double v = 0.0;
            for (double f : spec.frequencies) {
                v += std::sin(f * t);
            }
            out.setConstant(spec.amplitude * v);
            break;
        }
    }
    return out;
}

Eigen::VectorXd rk4_step(const SystemDynamics& dyn, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& u, const Eigen::VectorXd& d, double h) {
    if (!(h > 0.0)) {
        throw std::invalid_argument("rk4_step: h must be positive");
    }
    if (x.size() != dyn.n() || u.size() != dyn.m() || d.size() != dyn.z()) {
        throw std::invalid_argument("rk4_step: dimension mismatch");
    }
    const Eigen::VectorXd forcing = dyn.B * u + dyn.D * d;
    const auto f = [&](const Eigen::VectorXd& s) -> Eigen::VectorXd { return dyn.A * s + forcing; };
    const Eigen::VectorXd k1 = f(x);
    const Eigen::VectorXd k2 = f(x + 0.5 * h * k1);
    const Eigen::VectorXd k3 = f(x + 0.5 * h * k2);
    const Eigen::VectorXd k4 = f(x + h * k3);
    Eigen::VectorXd next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
        throw NumericError("rk4_step: non-finite state");
    }
    return next;
}

int DataBatch::required_windows() const {
    return role == BatchRole::Expert ? packed_size(n) + n * m + n * z : packed_size(n);
}

void DataBatch::validate() const {
    if (n < 1 || m < 1 || z < 1 || !(T_window > 0.0)) {
        throw std::invalid_argument("batch: invalid dimensions");
    }
    if (window_count() < required_windows()) {
        throw std::invalid_argument("batch: window count below the rank-condition minimum");
    }
    const int N = packed_size(n);
    const bool expert = role == BatchRole::Expert;
    for (const BatchWindow& w : windows) {
        if (w.start_state.size() != n || w.end_state.size() != n || w.d_xx.size() != N ||
            w.i_xx.size() != N || w.i_xu.size() != n * m || w.i_xd.size() != n * z) {
            throw std::invalid_argument("batch: window with inconsistent dimensions");
        }
        if (expert && (w.i_xe.size() != n * m || w.i_vv.size() != packed_size(m))) {
            throw std::invalid_argument("batch: expert window is missing probing integrals");
        }
        const Eigen::VectorXd expect = quad_basis(w.end_state) - quad_basis(w.start_state);
        if ((w.d_xx - expect).cwiseAbs().maxCoeff() >
            1e-9 * std::max(1.0, expect.cwiseAbs().maxCoeff())) {
            throw std::invalid_argument("batch: d_xx does not match the recorded states");
        }
    }
}

DataBatch collect_expert_batch(const SystemDynamics& dyn, const Eigen::MatrixXd& K_target,
                               const SignalSpec& noise, const SignalSpec& disturbance,
                               double T_window, int window_count, double h,
                               const Eigen::VectorXd& x0) {
    return collect_batch(dyn, K_target, &noise, disturbance, T_window, window_count, h, x0,
                         BatchRole::Expert);
}

DataBatch collect_learner_batch(const SystemDynamics& dyn, const Eigen::MatrixXd& K_behavior,
                                const SignalSpec& disturbance, double T_window, int window_count,
                                double h, const Eigen::VectorXd& x0) {
    if (K_behavior.rows() != dyn.m() || K_behavior.cols() != dyn.n()) {
        throw std::invalid_argument("collect_learner_batch: behavior gain must be m x n");
    }
    if (!is_hurwitz(dyn.A - dyn.B * K_behavior)) {
        throw StabilityError("collect_learner_batch: behavior policy is not stabilizing");
    }
    return collect_batch(dyn, K_behavior, nullptr, disturbance, T_window, window_count, h, x0,
                         BatchRole::Learner);
}

Trajectory simulate_closed_loop(const SystemDynamics& dyn, const Eigen::MatrixXd& K,
                                const SignalSpec& disturbance, double duration, double h,
                                const Eigen::VectorXd& x0) {
    dyn.validate();
    disturbance.validate();
    if (K.rows() != dyn.m() || K.cols() != dyn.n()) {
        throw std::invalid_argument("simulate_closed_loop: gain must be m x n");
    }
    const int steps = static_cast<int>(std::llround(duration / h));
    if (steps < 1 || std::abs(duration / h - steps) > 1e-9 * duration / h) {
        throw std::invalid_argument(
            "simulate_closed_loop: duration must be an integer multiple of h");
    }

    Trajectory traj;
    traj.h = h;
    traj.t.reserve(steps + 1);
    traj.x.reserve(steps + 1);
    Eigen::VectorXd x = x0;
    traj.t.push_back(0.0);
    traj.x.push_back(x);
    for (int s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) * h;
        const Eigen::VectorXd d =
            sample_signal(disturbance, t, static_cast<std::uint64_t>(s), dyn.z());
        const Eigen::VectorXd u = -K * x;
        x = rk4_step(dyn, x, u, d, h);
        check_state(x, t + h);
        traj.t.push_back(t + h);
        traj.x.push_back(x);
    }
    return traj;
}

void write_batch_csv(const DataBatch& batch, const std::string& path) {
    auto out = csv::open_out(path);
    const bool expert = batch.role == BatchRole::Expert;
    out << "# zsirl-batch role=" << (expert ? "expert" : "learner") << " n=" << batch.n
        << " m=" << batch.m << " z=" << batch.z << " T=" << csv::g17(batch.T_window) << "\n";

    std::vector<std::string> cols = {"window"};
    auto add_group = [&cols](const std::string& prefix, int count) {
        for (int i = 0; i < count; ++i) {
            cols.push_back(prefix + std::to_string(i));
        }
    };
    const int N = packed_size(batch.n);
    add_group("sx", batch.n);
    add_group("ex", batch.n);
    add_group("dxx", N);
    add_group("ixx", N);
    add_group("ixu", batch.n * batch.m);
    add_group("ixd", batch.n * batch.z);
    if (expert) {
        add_group("ixe", batch.n * batch.m);
        add_group("ivv", packed_size(batch.m));
    }
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out << cols[i] << (i + 1 < cols.size() ? "," : "\n");
    }

    for (int w = 0; w < batch.window_count(); ++w) {
        const BatchWindow& win = batch.windows[w];
        out << w;
        auto emit = [&out](const Eigen::VectorXd& v) {
            for (Eigen::Index i = 0; i < v.size(); ++i) {
                out << ',' << csv::g17(v[i]);
            }
        };
        emit(win.start_state);
        emit(win.end_state);
        emit(win.d_xx);
        emit(win.i_xx);
        emit(win.i_xu);
        emit(win.i_xd);
        if (expert) {
            emit(win.i_xe);
            emit(win.i_vv);
        }
        out << "\n";
    }
}

DataBatch read_batch_csv(const std::string& path) {
    auto in = csv::open_in(path);
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path + ": empty file");
    }
    const auto meta = csv::parse_meta(line, "zsirl-batch");

    DataBatch batch;
    const std::string role = csv::meta_value(meta, "role");
    if (role == "expert") {
        batch.role = BatchRole::Expert;
    } else if (role == "learner") {
        batch.role = BatchRole::Learner;
    } else {
        throw std::runtime_error(path + ": unknown batch role '" + role + "'");
    }
    batch.n = static_cast<int>(csv::to_double(csv::meta_value(meta, "n"), path));
    batch.m = static_cast<int>(csv::to_double(csv::meta_value(meta, "m"), path));
    batch.z = static_cast<int>(csv::to_double(csv::meta_value(meta, "z"), path));
    batch.T_window = csv::to_double(csv::meta_value(meta, "T"), path);

    if (!std::getline(in, line)) {
        throw std::runtime_error(path + ": missing header row");
    }
    const bool expert = batch.role == BatchRole::Expert;
    const int N = packed_size(batch.n);
    const std::size_t expected =
        1 + 2 * batch.n + 2 * N + batch.n * batch.m + batch.n * batch.z +
        (expert ? batch.n * batch.m + packed_size(batch.m) : 0);
    if (csv::split(csv::trim(line), ',').size() != expected) {
        throw std::runtime_error(path + ": header column count mismatch");
    }

    int line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string trimmed = csv::trim(line);
        if (trimmed.empty()) {
            continue;
        }
        const auto fields = csv::split(trimmed, ',');
        if (fields.size() != expected) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": column count mismatch");
        }
        std::size_t k = 1;  // skip window index
        auto take = [&](int count) {
            Eigen::VectorXd v(count);
            for (int i = 0; i < count; ++i) {
                v[i] = csv::to_double(fields[k++], path + ":" + std::to_string(line_no));
            }
            return v;
        };
        BatchWindow win;
        win.start_state = take(batch.n);
        win.end_state = take(batch.n);
        win.d_xx = take(N);
        win.i_xx = take(N);
        win.i_xu = take(batch.n * batch.m);
        win.i_xd = take(batch.n * batch.z);
        if (expert) {
            win.i_xe = take(batch.n * batch.m);
            win.i_vv = take(packed_size(batch.m));
        }
        batch.windows.push_back(std::move(win));
    }
    batch.validate();
    return batch;
}

}  // namespace zsirl
