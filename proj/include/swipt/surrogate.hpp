#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "swipt/circuit.hpp"
#include "swipt/mdp.hpp"

namespace swipt {

enum class SurrogateTarget { FinalVoltage, AveragePower };

/**
 * Small feed-forward approximator of one circuit response surface, two inputs
 * (load voltage, received amplitude) and one output. Hidden layers use ReLU;
 * the output is a sigmoid scaled to [0, output_scale]. Inputs are normalized
 * per feature with constants learned from the training set.
 */
struct MlpModel {
    std::vector<std::size_t> layer_widths;        // input(2), hidden..., output(1)
    std::vector<std::vector<double>> weights;     // per layer, row-major [out x in]
    std::vector<std::vector<double>> biases;      // per layer
    std::array<double, 2> input_mean{0.0, 0.0};
    std::array<double, 2> input_scale{1.0, 1.0};
    double output_scale = 1.0;
    SurrogateTarget target = SurrogateTarget::FinalVoltage;

    double predict(double v, double r_e) const;

    std::string to_json() const;
    static MlpModel from_json(const std::string& text);
};

struct TrainConfig {
    std::size_t epochs = 400;
    std::size_t batch_size = 64;
    double learning_rate = 3e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 1;
    std::size_t hidden_layers = 5;   // paper-scale architecture: 7
    std::size_t hidden_width = 15;

    void validate() const;
};

struct EpochStats {
    double train_mape = 0.0;  // running loss over the epoch's batches
    double val_mape = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    std::size_t best_epoch = 0;
    double best_val_mape = 0.0;
};

/// Mean absolute percentage error with a 1e-9 denominator floor, in percent.
double mape_percent(const MlpModel& model, const std::vector<DatasetSample>& data,
                    SurrogateTarget target);

/// Adam + explicit backpropagation on the MAPE loss; deterministic per seed.
/// Returns the weights with the lowest validation MAPE seen across epochs.
/// Throws numerical_error (with the epoch index) if the loss diverges.
MlpModel train_mlp(const std::vector<DatasetSample>& train,
                   const std::vector<DatasetSample>& validation, SurrogateTarget target,
                   const TrainConfig& config, TrainReport* report = nullptr);

/**
 * Interpolation-table responder over a rectangular (v, r_E) grid: bilinear
 * inside the hull, exact at nodes, clamped at the edges (clamped queries are
 * counted for diagnostics).
 */
class BilinearTable {
public:
    static BilinearTable from_grid(const std::vector<DatasetSample>& grid, SurrogateTarget target);

    double at(double v, double r_e) const;
    std::size_t clamped_queries() const { return clamped_; }

    const std::vector<double>& v_axis() const { return v_axis_; }
    const std::vector<double>& r_axis() const { return r_axis_; }

private:
    std::vector<double> v_axis_, r_axis_;
    std::vector<double> values_;  // [iv][ir]
    mutable std::size_t clamped_ = 0;
};

/// MDP backend backed by the two trained networks.
class SurrogateResponder : public SymbolResponder {
public:
    SurrogateResponder(MlpModel final_voltage, MlpModel average_power)
        : fv_(std::move(final_voltage)), pw_(std::move(average_power)) {}
    SymbolResponse respond(double v0, double r_e) const override {
        return {fv_.predict(v0, r_e), pw_.predict(v0, r_e)};
    }

private:
    MlpModel fv_, pw_;
};

/// MDP backend backed by two interpolation tables.
class TableResponder : public SymbolResponder {
public:
    TableResponder(BilinearTable final_voltage, BilinearTable average_power)
        : fv_(std::move(final_voltage)), pw_(std::move(average_power)) {}
    SymbolResponse respond(double v0, double r_e) const override {
        return {fv_.at(v0, r_e), pw_.at(v0, r_e)};
    }

private:
    BilinearTable fv_, pw_;
};

}  // namespace swipt
