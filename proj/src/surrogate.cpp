#include "swipt/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

namespace swipt {

using json = nlohmann::json;

namespace {
constexpr double kMapeFloor = 1e-9;  // SI-unit denominator floor

double target_of(const DatasetSample& s, SurrogateTarget t) {
    return t == SurrogateTarget::FinalVoltage ? s.v_final : s.p_avg;
}

double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

// forward pass keeping pre-activations for backprop
struct Workspace {
    std::vector<std::vector<double>> act;  // activations per layer (incl. input)
    std::vector<std::vector<double>> pre;  // pre-activations per layer
};

double forward(const MlpModel& m, double v, double r_e, Workspace* ws) {
    const std::size_t n_layers = m.weights.size();
    std::vector<double> x = {(v - m.input_mean[0]) / m.input_scale[0],
                             (r_e - m.input_mean[1]) / m.input_scale[1]};
    if (ws) {
        ws->act.assign(n_layers + 1, {});
        ws->pre.assign(n_layers, {});
        ws->act[0] = x;
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t n_out = m.layer_widths[l + 1];
        const std::size_t n_in = m.layer_widths[l];
        std::vector<double> z(n_out);
        for (std::size_t o = 0; o < n_out; ++o) {
            double acc = m.biases[l][o];
            const double* w = m.weights[l].data() + o * n_in;
            for (std::size_t i = 0; i < n_in; ++i) acc += w[i] * x[i];
            z[o] = acc;
        }
        if (ws) ws->pre[l] = z;
        const bool last = l + 1 == n_layers;
        for (std::size_t o = 0; o < n_out; ++o)
            z[o] = last ? m.output_scale * sigmoid(z[o]) : std::max(0.0, z[o]);
        if (ws) ws->act[l + 1] = z;
        x = std::move(z);
    }
    return x[0];
}

}  // namespace

double MlpModel::predict(double v, double r_e) const {
    if (!std::isfinite(v) || !std::isfinite(r_e))
        throw std::invalid_argument("predict: inputs must be finite");
    return forward(*this, v, r_e, nullptr);
}

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
    if (adam_beta1 <= 0.0 || adam_beta1 >= 1.0 || adam_beta2 <= 0.0 || adam_beta2 >= 1.0)
        throw std::invalid_argument("adam betas must lie in (0, 1)");
    if (epochs == 0 || batch_size == 0) throw std::invalid_argument("epochs/batch_size must be >= 1");
    if (hidden_layers == 0 || hidden_width == 0)
        throw std::invalid_argument("network must have at least one hidden node");
}

double mape_percent(const MlpModel& model, const std::vector<DatasetSample>& data,
                    SurrogateTarget target) {
    if (data.empty()) throw std::invalid_argument("mape: empty dataset");
    double acc = 0.0;
    for (const auto& s : data) {
        const double y = target_of(s, target);
        const double yh = model.predict(s.v_init, s.r_e);
        acc += std::abs(yh - y) / std::max(std::abs(y), kMapeFloor);
    }
    return 100.0 * acc / static_cast<double>(data.size());
}

MlpModel train_mlp(const std::vector<DatasetSample>& train,
                   const std::vector<DatasetSample>& validation, SurrogateTarget target,
                   const TrainConfig& config, TrainReport* report) {
    config.validate();
    if (train.empty() || validation.empty())
        throw std::invalid_argument("train: datasets must be nonempty");

    MlpModel m;
    m.target = target;
    m.layer_widths.push_back(2);
    for (std::size_t l = 0; l < config.hidden_layers; ++l)
        m.layer_widths.push_back(config.hidden_width);
    m.layer_widths.push_back(1);

    // per-feature normalization and sigmoid output scaling from the data
    double mean_v = 0.0, mean_r = 0.0;
    double y_max = 0.0;
    for (const auto& s : train) {
        mean_v += s.v_init;
        mean_r += s.r_e;
        y_max = std::max(y_max, std::abs(target_of(s, target)));
    }
    for (const auto& s : validation) y_max = std::max(y_max, std::abs(target_of(s, target)));
    mean_v /= static_cast<double>(train.size());
    mean_r /= static_cast<double>(train.size());
    double var_v = 0.0, var_r = 0.0;
    for (const auto& s : train) {
        var_v += (s.v_init - mean_v) * (s.v_init - mean_v);
        var_r += (s.r_e - mean_r) * (s.r_e - mean_r);
    }
    var_v /= static_cast<double>(train.size());
    var_r /= static_cast<double>(train.size());
    m.input_mean = {mean_v, mean_r};
    m.input_scale = {std::max(std::sqrt(var_v), 1e-12), std::max(std::sqrt(var_r), 1e-12)};
    m.output_scale = std::max(1.05 * y_max, 1e-12);

    Rng rng(config.seed);
    const std::size_t n_layers = m.layer_widths.size() - 1;
    m.weights.resize(n_layers);
    m.biases.resize(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        const std::size_t n_in = m.layer_widths[l], n_out = m.layer_widths[l + 1];
        m.weights[l].resize(n_in * n_out);
        m.biases[l].assign(n_out, 0.0);
        const double s = std::sqrt(2.0 / static_cast<double>(n_in));
        for (auto& w : m.weights[l]) w = s * rng.gaussian();
    }

    // Adam state
    std::vector<std::vector<double>> mw(n_layers), vw(n_layers), mb(n_layers), vb(n_layers);
    for (std::size_t l = 0; l < n_layers; ++l) {
        mw[l].assign(m.weights[l].size(), 0.0);
        vw[l].assign(m.weights[l].size(), 0.0);
        mb[l].assign(m.biases[l].size(), 0.0);
        vb[l].assign(m.biases[l].size(), 0.0);
    }

    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    MlpModel best = m;
    double best_val = mape_percent(m, validation, target);
    std::size_t best_epoch = 0;
    if (report) {
        report->epochs.clear();
    }

    std::vector<std::vector<double>> gw(n_layers), gb(n_layers);
    Workspace ws;
    std::size_t adam_t = 0;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        // Fisher-Yates shuffle
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
            std::swap(order[i - 1], order[std::min(j, i - 1)]);
        }
        double epoch_loss = 0.0;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            const double inv_batch = 1.0 / static_cast<double>(stop - start);
            for (std::size_t l = 0; l < n_layers; ++l) {
                gw[l].assign(m.weights[l].size(), 0.0);
                gb[l].assign(m.biases[l].size(), 0.0);
            }
            for (std::size_t idx = start; idx < stop; ++idx) {
                const auto& s = train[order[idx]];
                const double y = target_of(s, target);
                const double yh = forward(m, s.v_init, s.r_e, &ws);
                const double denom = std::max(std::abs(y), kMapeFloor);
                epoch_loss += std::abs(yh - y) / denom;
                ++seen;
                // d|yh-y|/dyh / denom, through the scaled sigmoid
                double dl_dyh = ((yh > y) ? 1.0 : (yh < y ? -1.0 : 0.0)) / denom * inv_batch;
                const double sig = yh / m.output_scale;
                std::vector<double> delta = {dl_dyh * m.output_scale * sig * (1.0 - sig)};
                for (std::size_t l = n_layers; l-- > 0;) {
                    const std::size_t n_in = m.layer_widths[l];
                    const std::size_t n_out = m.layer_widths[l + 1];
                    for (std::size_t o = 0; o < n_out; ++o) {
                        gb[l][o] += delta[o];
                        double* gwr = gw[l].data() + o * n_in;
                        const auto& a = ws.act[l];
                        for (std::size_t i = 0; i < n_in; ++i) gwr[i] += delta[o] * a[i];
                    }
                    if (l == 0) break;
                    std::vector<double> prev(n_in, 0.0);
                    for (std::size_t i = 0; i < n_in; ++i) {
                        if (ws.pre[l - 1][i] <= 0.0) continue;  // ReLU gate
                        double acc = 0.0;
                        for (std::size_t o = 0; o < n_out; ++o)
                            acc += m.weights[l][o * n_in + i] * delta[o];
                        prev[i] = acc;
                    }
                    delta = std::move(prev);
                }
            }
            // Adam update
            ++adam_t;
            const double b1t = 1.0 - std::pow(config.adam_beta1, static_cast<double>(adam_t));
            const double b2t = 1.0 - std::pow(config.adam_beta2, static_cast<double>(adam_t));
            for (std::size_t l = 0; l < n_layers; ++l) {
                for (std::size_t i = 0; i < m.weights[l].size(); ++i) {
                    mw[l][i] = config.adam_beta1 * mw[l][i] + (1 - config.adam_beta1) * gw[l][i];
                    vw[l][i] = config.adam_beta2 * vw[l][i] +
                               (1 - config.adam_beta2) * gw[l][i] * gw[l][i];
                    m.weights[l][i] -= config.learning_rate * (mw[l][i] / b1t) /
                                       (std::sqrt(vw[l][i] / b2t) + config.adam_epsilon);
                }
                for (std::size_t i = 0; i < m.biases[l].size(); ++i) {
                    mb[l][i] = config.adam_beta1 * mb[l][i] + (1 - config.adam_beta1) * gb[l][i];
                    vb[l][i] = config.adam_beta2 * vb[l][i] +
                               (1 - config.adam_beta2) * gb[l][i] * gb[l][i];
                    m.biases[l][i] -= config.learning_rate * (mb[l][i] / b1t) /
                                      (std::sqrt(vb[l][i] / b2t) + config.adam_epsilon);
                }
            }
        }
        const double train_mape = 100.0 * epoch_loss / static_cast<double>(seen);
        if (!std::isfinite(train_mape))
            throw numerical_error("train: loss diverged at epoch " + std::to_string(epoch));
        const double val = mape_percent(m, validation, target);
        if (report) report->epochs.push_back({train_mape, val});
        if (val < best_val) {
            best_val = val;
            best = m;
            best_epoch = epoch;
        }
    }
    if (report) {
        report->best_epoch = best_epoch;
        report->best_val_mape = best_val;
    }
    return best;
}

std::string MlpModel::to_json() const {
    json j;
    j["format_version"] = 1;
    j["layer_widths"] = layer_widths;
    j["weights"] = weights;
    j["biases"] = biases;
    j["input_mean"] = input_mean;
    j["input_scale"] = input_scale;
    j["output_scale"] = output_scale;
    j["target"] = target == SurrogateTarget::FinalVoltage ? "final_voltage" : "average_power";
    return j.dump();
}

MlpModel MlpModel::from_json(const std::string& text) {
    json j = json::parse(text);
    MlpModel m;
    m.layer_widths = j.at("layer_widths").get<std::vector<std::size_t>>();
    m.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    m.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    auto im = j.at("input_mean").get<std::vector<double>>();
    auto is = j.at("input_scale").get<std::vector<double>>();
    if (im.size() != 2 || is.size() != 2)
        throw std::invalid_argument("mlp JSON: input normalization must have 2 entries");
    m.input_mean = {im[0], im[1]};
    m.input_scale = {is[0], is[1]};
    m.output_scale = j.at("output_scale").get<double>();
    m.target = j.at("target").get<std::string>() == "average_power"
                   ? SurrogateTarget::AveragePower
                   : SurrogateTarget::FinalVoltage;
    if (m.layer_widths.size() < 2 || m.weights.size() != m.layer_widths.size() - 1 ||
        m.biases.size() != m.weights.size())
        throw std::invalid_argument("mlp JSON: inconsistent layer sizes");
    for (std::size_t l = 0; l + 1 < m.layer_widths.size(); ++l)
        if (m.weights[l].size() != m.layer_widths[l] * m.layer_widths[l + 1] ||
            m.biases[l].size() != m.layer_widths[l + 1])
            throw std::invalid_argument("mlp JSON: weight shape mismatch at layer " +
                                        std::to_string(l));
    return m;
}

BilinearTable BilinearTable::from_grid(const std::vector<DatasetSample>& grid,
                                       SurrogateTarget target) {
    if (grid.empty()) throw std::invalid_argument("table backend: empty dataset");
    auto collect = [](std::vector<double> vals) {
        std::sort(vals.begin(), vals.end());
        std::vector<double> axis;
        for (double v : vals)
            if (axis.empty() || v > axis.back() + 1e-15 + 1e-12 * std::abs(v)) axis.push_back(v);
        return axis;
    };
    std::vector<double> vs, rs;
    vs.reserve(grid.size());
    rs.reserve(grid.size());
    for (const auto& s : grid) {
        vs.push_back(s.v_init);
        rs.push_back(s.r_e);
    }
    BilinearTable t;
    t.v_axis_ = collect(vs);
    t.r_axis_ = collect(rs);
    if (t.v_axis_.size() * t.r_axis_.size() != grid.size())
        throw std::invalid_argument("table backend: dataset does not cover a rectangular grid");
    t.values_.assign(grid.size(), std::numeric_limits<double>::quiet_NaN());
    auto find = [](const std::vector<double>& axis, double v) {
        auto it = std::lower_bound(axis.begin(), axis.end(), v - 1e-12 * std::max(1.0, std::abs(v)) - 1e-15);
        return static_cast<std::size_t>(it - axis.begin());
    };
    for (const auto& s : grid) {
        const std::size_t iv = find(t.v_axis_, s.v_init);
        const std::size_t ir = find(t.r_axis_, s.r_e);
        t.values_[iv * t.r_axis_.size() + ir] = target_of(s, target);
    }
    for (double v : t.values_)
        if (std::isnan(v))
            throw std::invalid_argument("table backend: dataset does not cover a rectangular grid");
    return t;
}

double BilinearTable::at(double v, double r_e) const {
    auto locate = [this](const std::vector<double>& axis, double x, bool& clamped) {
        if (x <= axis.front()) {
            if (x < axis.front()) clamped = true;
            return std::pair<std::size_t, double>{0, 0.0};
        }
        if (x >= axis.back()) {
            if (x > axis.back()) clamped = true;
            return std::pair<std::size_t, double>{axis.size() - 2, 1.0};
        }
        const std::size_t hi =
            static_cast<std::size_t>(std::upper_bound(axis.begin(), axis.end(), x) - axis.begin());
        const std::size_t lo = hi - 1;
        return std::pair<std::size_t, double>{lo, (x - axis[lo]) / (axis[hi] - axis[lo])};
    };
    bool clamped = false;
    if (v_axis_.size() == 1 || r_axis_.size() == 1)
        throw std::invalid_argument("table backend: axes need at least 2 points");
    auto [iv, tv] = locate(v_axis_, v, clamped);
    auto [ir, tr] = locate(r_axis_, r_e, clamped);
    if (clamped) ++clamped_;
    const std::size_t nr = r_axis_.size();
    auto val = [&](std::size_t i, std::size_t j) { return values_[i * nr + j]; };
    return (1 - tv) * ((1 - tr) * val(iv, ir) + tr * val(iv, ir + 1)) +
           tv * ((1 - tr) * val(iv + 1, ir) + tr * val(iv + 1, ir + 1));
}

}  // namespace swipt
