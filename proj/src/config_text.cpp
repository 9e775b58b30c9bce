#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "csv_util.hpp"
#include "zsirl/matrix_ops.hpp"
#include "zsirl/scenario.hpp"

// Scenario file format: one "dotted.key = value" per line, '#' comments.
// Values are scalars (1e-8), vectors ([1,-1]), matrices ([[a,b],[c,d]]) or
// bare words (sinusoid-sum).

namespace zsirl {

namespace {

struct ConfigValue {
    enum class Type { Scalar, Vector, Matrix, Word };
    Type type = Type::Word;
    double scalar = 0.0;
    Eigen::VectorXd vec;
    Eigen::MatrixXd mat;
    std::string word;
    int line = 0;
};

class ConfigMap {
  public:
    ConfigMap(std::map<std::string, ConfigValue> values, std::string path)
        : values_(std::move(values)), path_(std::move(path)) {}

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    double scalar(const std::string& key) {
        const ConfigValue& v = get(key);
        if (v.type != ConfigValue::Type::Scalar) {
            fail(key, v.line, "expected a scalar");
        }
        return v.scalar;
    }

    double scalar_or(const std::string& key, double fallback) {
        return has(key) ? scalar(key) : fallback;
    }

    int integer(const std::string& key) {
        const double v = scalar(key);
        const int i = static_cast<int>(std::llround(v));
        if (std::abs(v - i) > 1e-12) {
            fail(key, get(key).line, "expected an integer");
        }
        return i;
    }

    int integer_or(const std::string& key, int fallback) {
        return has(key) ? integer(key) : fallback;
    }

    std::uint64_t unsigned_or(const std::string& key, std::uint64_t fallback) {
        if (!has(key)) {
            return fallback;
        }
        const double v = scalar(key);
        if (v < 0.0) {
            fail(key, get(key).line, "expected a non-negative integer");
        }
        return static_cast<std::uint64_t>(std::llround(v));
    }

    Eigen::MatrixXd matrix(const std::string& key) {
        const ConfigValue& v = get(key);
        if (v.type != ConfigValue::Type::Matrix) {
            fail(key, v.line, "expected a matrix like [[a,b],[c,d]]");
        }
        return v.mat;
    }

    Eigen::VectorXd vector(const std::string& key) {
        const ConfigValue& v = get(key);
        if (v.type != ConfigValue::Type::Vector) {
            fail(key, v.line, "expected a vector like [a,b]");
        }
        return v.vec;
    }

    std::string word(const std::string& key) {
        const ConfigValue& v = get(key);
        if (v.type != ConfigValue::Type::Word) {
            fail(key, v.line, "expected a word");
        }
        return v.word;
    }

    std::string word_or(const std::string& key, const std::string& fallback) {
        return has(key) ? word(key) : fallback;
    }

    void check_all_used() const {
        for (const auto& [key, value] : values_) {
            if (used_.count(key) == 0) {
                fail(key, value.line, "unknown key");
            }
        }
    }

    [[noreturn]] void fail(const std::string& key, int line, const std::string& what) const {
        std::ostringstream msg;
        msg << path_ << ":" << line << ": '" << key << "': " << what;
        throw std::invalid_argument(msg.str());
    }

  private:
    const ConfigValue& get(const std::string& key) {
        const auto it = values_.find(key);
        if (it == values_.end()) {
            throw std::invalid_argument(path_ + ": missing required key '" + key + "'");
        }
        used_.insert(key);
        return it->second;
    }

    std::map<std::string, ConfigValue> values_;
    std::set<std::string> used_;
    std::string path_;
};

class ValueParser {
  public:
    ValueParser(const std::string& text, const std::string& context)
        : text_(text), context_(context) {}

    ConfigValue parse() {
        skip_ws();
        ConfigValue out;
        if (peek() == '[') {
            if (second_non_ws() == '[') {
                out.type = ConfigValue::Type::Matrix;
                out.mat = parse_matrix();
            } else {
                out.type = ConfigValue::Type::Vector;
                out.vec = parse_vector();
            }
        } else {
            const std::string token = csv::trim(text_.substr(pos_));
            pos_ = text_.size();
            try {
                std::size_t used = 0;
                const double v = std::stod(token, &used);
                if (used == token.size()) {
                    out.type = ConfigValue::Type::Scalar;
                    out.scalar = v;
                    return out;
                }
            } catch (const std::exception&) {
            }
            if (token.empty()) {
                fail("missing value");
            }
            out.type = ConfigValue::Type::Word;
            out.word = token;
        }
        skip_ws();
        if (pos_ != text_.size()) {
            fail("trailing characters after value");
        }
        return out;
    }

  private:
    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    char second_non_ws() const {
        for (std::size_t i = pos_ + 1; i < text_.size(); ++i) {
            if (!std::isspace(static_cast<unsigned char>(text_[i]))) {
                return text_[i];
            }
        }
        return '\0';
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    void expect(char c) {
        skip_ws();
        if (peek() != c) {
            fail(std::string("expected '") + c + "'");
        }
        ++pos_;
    }

    double parse_number() {
        skip_ws();
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(text_.substr(pos_), &used);
        } catch (const std::exception&) {
            fail("expected a number");
        }
        pos_ += used;
        return v;
    }

    Eigen::VectorXd parse_vector() {
        expect('[');
        std::vector<double> entries;
        skip_ws();
        if (peek() != ']') {
            entries.push_back(parse_number());
            skip_ws();
            while (peek() == ',') {
                ++pos_;
                entries.push_back(parse_number());
                skip_ws();
            }
        }
        expect(']');
        Eigen::VectorXd v(entries.size());
        for (std::size_t i = 0; i < entries.size(); ++i) {
            v[i] = entries[i];
        }
        return v;
    }

    Eigen::MatrixXd parse_matrix() {
        expect('[');
        std::vector<Eigen::VectorXd> rows;
        rows.push_back(parse_vector());
        skip_ws();
        while (peek() == ',') {
            ++pos_;
            rows.push_back(parse_vector());
            skip_ws();
        }
        expect(']');
        const Eigen::Index cols = rows.front().size();
        Eigen::MatrixXd M(rows.size(), cols);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != cols) {
                fail("matrix rows have unequal lengths");
            }
            M.row(r) = rows[r].transpose();
        }
        return M;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument(context_ + ": " + what);
    }

    const std::string& text_;
    std::string context_;
    std::size_t pos_ = 0;
};

SignalSpec parse_signal(ConfigMap& map, const std::string& prefix) {
    SignalSpec spec;
    const std::string kind = map.word_or(prefix + ".kind", "zero");
    if (kind == "zero") {
        spec.kind = SignalKind::Zero;
    } else if (kind == "uniform-random") {
        spec.kind = SignalKind::UniformRandom;
    } else if (kind == "sinusoid-sum") {
        spec.kind = SignalKind::SinusoidSum;
    } else {
        throw std::invalid_argument("'" + prefix + ".kind': unknown signal kind '" + kind + "'");
    }
    spec.amplitude = map.scalar_or(prefix + ".amplitude", 0.0);
    if (map.has(prefix + ".frequencies")) {
        const Eigen::VectorXd f = map.vector(prefix + ".frequencies");
        spec.frequencies.assign(f.data(), f.data() + f.size());
    }
    spec.seed = map.unsigned_or(prefix + ".seed", 0);
    try {
        spec.validate();
    } catch (const std::exception& e) {
        throw std::invalid_argument("'" + prefix + "': " + e.what());
    }
    return spec;
}

std::string signal_kind_name(SignalKind kind) {
    switch (kind) {
        case SignalKind::Zero:
            return "zero";
        case SignalKind::UniformRandom:
            return "uniform-random";
        case SignalKind::SinusoidSum:
            return "sinusoid-sum";
    }
    return "zero";
}

std::string format_vector(const Eigen::VectorXd& v) {
    std::ostringstream out;
    out << '[';
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out << (i > 0 ? "," : "") << csv::g17(v[i]);
    }
    out << ']';
    return out.str();
}

std::string format_matrix(const Eigen::MatrixXd& M) {
    std::ostringstream out;
    out << '[';
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
        out << (r > 0 ? "," : "") << format_vector(M.row(r).transpose());
    }
    out << ']';
    return out.str();
}

void write_signal(std::ostream& out, const std::string& prefix, const SignalSpec& spec) {
    out << prefix << ".kind = " << signal_kind_name(spec.kind) << "\n";
    out << prefix << ".amplitude = " << csv::g17(spec.amplitude) << "\n";
    if (!spec.frequencies.empty()) {
        Eigen::VectorXd f(spec.frequencies.size());
        for (std::size_t i = 0; i < spec.frequencies.size(); ++i) {
            f[i] = spec.frequencies[i];
        }
        out << prefix << ".frequencies = " << format_vector(f) << "\n";
    }
    out << prefix << ".seed = " << spec.seed << "\n";
}

std::uint64_t mix_seed(std::uint64_t v) {
    v += 0x9e3779b97f4a7c15ULL;
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
    return v ^ (v >> 31);
}

}  // namespace

IrlConfig ScenarioConfig::irl_config() const {
    IrlConfig cfg;
    cfg.R = R;
    cfg.gamma = gamma;
    cfg.Q0 = Q0;
    cfg.max_iters = max_iters;
    cfg.tol_converge = tol_converge;
    return cfg;
}

void ScenarioConfig::validate() const {
    dyn.validate();
    const int n = dyn.n();
    const int m = dyn.m();

    if (expert_weights.has_value() == target_gain.has_value()) {
        throw std::invalid_argument(
            "scenario: provide exactly one of expert weights (expert.Q/R/gamma) or an explicit "
            "gain (expert.K)");
    }
    if (expert_weights) {
        try {
            expert_weights->validate(dyn);
        } catch (const std::exception& e) {
            throw std::invalid_argument(std::string("scenario: expert weights: ") + e.what());
        }
    }
    if (target_gain && (target_gain->rows() != m || target_gain->cols() != n)) {
        throw std::invalid_argument("scenario: expert.K must be m x n");
    }

    irl_config().validate(n, m);  // learner.Q0 / learner.R / learner.gamma

    if (K_behavior.rows() != m || K_behavior.cols() != n) {
        throw std::invalid_argument("scenario: learner.K_b must be m x n");
    }
    if (!(T_window > 0.0)) {
        throw std::invalid_argument("scenario: data.T_window must be positive");
    }
    if (!(h > 0.0)) {
        throw std::invalid_argument("scenario: data.h must be positive");
    }
    const double ratio = T_window / h;
    if (std::abs(ratio - std::llround(ratio)) > 1e-9 * ratio) {
        throw std::invalid_argument("scenario: data.T_window must be an integer multiple of data.h");
    }
    if (expert_windows < 1 || learner_windows < 1) {
        throw std::invalid_argument("scenario: window counts must be positive");
    }
    if (x0.size() != n) {
        throw std::invalid_argument("scenario: data.x0 must have length n");
    }
    if (te_samples < 1) {
        throw std::invalid_argument("scenario: run.te_samples must be positive");
    }
    noise.validate();
    expert_disturbance.validate();
    learner_disturbance.validate();
}

ScenarioConfig load_config(const std::string& path) {
    auto in = csv::open_in(path);

    std::map<std::string, ConfigValue> values;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            line = line.substr(0, hash);
        }
        const std::string trimmed = csv::trim(line);
        if (trimmed.empty()) {
            continue;
        }
        const auto eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                        ": expected 'key = value'");
        }
        const std::string key = csv::trim(trimmed.substr(0, eq));
        const std::string value_text = csv::trim(trimmed.substr(eq + 1));
        if (key.empty()) {
            throw std::invalid_argument(path + ":" + std::to_string(line_no) + ": empty key");
        }
        if (values.count(key) != 0) {
            throw std::invalid_argument(path + ":" + std::to_string(line_no) +
                                        ": duplicate key '" + key + "'");
        }
        ValueParser parser(value_text, path + ":" + std::to_string(line_no) + ": '" + key + "'");
        ConfigValue v = parser.parse();
        v.line = line_no;
        values.emplace(key, std::move(v));
    }

    ConfigMap map(std::move(values), path);
    ScenarioConfig cfg;

    cfg.dyn.A = map.matrix("dynamics.A");
    cfg.dyn.B = map.matrix("dynamics.B");
    cfg.dyn.D = map.matrix("dynamics.D");

    const bool has_weights = map.has("expert.Q") || map.has("expert.R") || map.has("expert.gamma");
    if (has_weights) {
        CostWeights w;
        w.Q = map.matrix("expert.Q");
        w.R = map.matrix("expert.R");
        w.gamma = map.scalar("expert.gamma");
        cfg.expert_weights = std::move(w);
    }
    if (map.has("expert.K")) {
        cfg.target_gain = map.matrix("expert.K");
    }

    cfg.Q0 = map.matrix("learner.Q0");
    cfg.R = map.matrix("learner.R");
    cfg.gamma = map.scalar("learner.gamma");
    cfg.K_behavior = map.matrix("learner.K_b");

    cfg.T_window = map.scalar("data.T_window");
    cfg.expert_windows = map.integer("data.expert_windows");
    cfg.learner_windows = map.integer("data.learner_windows");
    cfg.h = map.scalar_or("data.h", cfg.T_window / 8.0);
    if (map.has("data.x0")) {
        cfg.x0 = map.vector("data.x0");
    } else {
        // Alternating +-1 start, matching the two-state default [1, -1].
        cfg.x0.resize(cfg.dyn.n());
        for (int i = 0; i < cfg.dyn.n(); ++i) {
            cfg.x0[i] = (i % 2 == 0) ? 1.0 : -1.0;
        }
    }

    cfg.noise = parse_signal(map, "noise");
    cfg.expert_disturbance = parse_signal(map, "disturbance");
    cfg.learner_disturbance = parse_signal(map, "learner_disturbance");

    const std::string alg = map.word_or("run.algorithm", "alg2");
    if (alg == "alg1") {
        cfg.algorithm = AlgorithmChoice::ModelBased;
    } else if (alg == "alg2") {
        cfg.algorithm = AlgorithmChoice::DataDriven;
    } else if (alg == "both") {
        cfg.algorithm = AlgorithmChoice::Both;
    } else {
        throw std::invalid_argument("'run.algorithm': expected alg1, alg2 or both, got '" + alg +
                                    "'");
    }
    cfg.max_iters = map.integer_or("run.max_iters", 500);
    cfg.tol_converge = map.scalar_or("run.tol_converge", 1e-8);
    cfg.te_samples = map.integer_or("run.te_samples", 250);
    cfg.seed = map.unsigned_or("run.seed", 1);
    cfg.out_dir = map.word_or("run.out", "out");

    map.check_all_used();
    cfg.validate();
    return cfg;
}

void save_config(const ScenarioConfig& cfg, const std::string& path) {
    auto out = csv::open_out(path);
    out << "dynamics.A = " << format_matrix(cfg.dyn.A) << "\n";
    out << "dynamics.B = " << format_matrix(cfg.dyn.B) << "\n";
    out << "dynamics.D = " << format_matrix(cfg.dyn.D) << "\n";
    if (cfg.expert_weights) {
        out << "expert.Q = " << format_matrix(cfg.expert_weights->Q) << "\n";
        out << "expert.R = " << format_matrix(cfg.expert_weights->R) << "\n";
        out << "expert.gamma = " << csv::g17(cfg.expert_weights->gamma) << "\n";
    }
    if (cfg.target_gain) {
        out << "expert.K = " << format_matrix(*cfg.target_gain) << "\n";
    }
    out << "learner.Q0 = " << format_matrix(cfg.Q0) << "\n";
    out << "learner.R = " << format_matrix(cfg.R) << "\n";
    out << "learner.gamma = " << csv::g17(cfg.gamma) << "\n";
    out << "learner.K_b = " << format_matrix(cfg.K_behavior) << "\n";
    out << "data.T_window = " << csv::g17(cfg.T_window) << "\n";
    out << "data.expert_windows = " << cfg.expert_windows << "\n";
    out << "data.learner_windows = " << cfg.learner_windows << "\n";
    out << "data.h = " << csv::g17(cfg.h) << "\n";
    out << "data.x0 = " << format_vector(cfg.x0) << "\n";
    write_signal(out, "noise", cfg.noise);
    write_signal(out, "disturbance", cfg.expert_disturbance);
    write_signal(out, "learner_disturbance", cfg.learner_disturbance);
    switch (cfg.algorithm) {
        case AlgorithmChoice::ModelBased:
            out << "run.algorithm = alg1\n";
            break;
        case AlgorithmChoice::DataDriven:
            out << "run.algorithm = alg2\n";
            break;
        case AlgorithmChoice::Both:
            out << "run.algorithm = both\n";
            break;
    }
    out << "run.max_iters = " << cfg.max_iters << "\n";
    out << "run.tol_converge = " << csv::g17(cfg.tol_converge) << "\n";
    out << "run.te_samples = " << cfg.te_samples << "\n";
    out << "run.seed = " << cfg.seed << "\n";
    out << "run.out = " << cfg.out_dir << "\n";
}

void override_seed(ScenarioConfig& cfg, std::uint64_t seed) {
    cfg.seed = seed;
    cfg.noise.seed = mix_seed(seed ^ 0x01);
    cfg.expert_disturbance.seed = mix_seed(seed ^ 0x02);
    cfg.learner_disturbance.seed = mix_seed(seed ^ 0x03);
}

}  // namespace zsirl
