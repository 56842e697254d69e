#include <doctest.h>

#include <cmath>

#include "swipt/circuit.hpp"
#include "swipt/util.hpp"

using namespace swipt;

TEST_CASE("source peak voltage reproduces the available-power identity") {
    CHECK(source_peak_voltage(0.0, 50.0) == doctest::Approx(0.0));
    // r_E^2 = 1 mW into 50 ohms -> sqrt(8 * 50 * 1e-3) = 0.632455532 V
    CHECK(source_peak_voltage(std::sqrt(1e-3), 50.0) == doctest::Approx(0.632455532).epsilon(1e-9));
    // r_E^2 = 50.1 uW (-13 dBm) -> 0.141562707 V
    CHECK(source_peak_voltage(std::sqrt(5.01e-5), 50.0) ==
          doctest::Approx(0.141562707).epsilon(1e-9));
    CHECK_THROWS_AS(source_peak_voltage(-1e-6, 50.0), std::domain_error);
}

TEST_CASE("delivered power into a matched load equals r_E^2") {
    // V_p^2 / (8 Rs) is the available power of the Thevenin source
    const double r_e = std::sqrt(1e-3);
    const double vp = source_peak_voltage(r_e, 50.0);
    CHECK(vp * vp / (8.0 * 50.0) == doctest::Approx(r_e * r_e).epsilon(1e-12));
}

namespace {

EnvelopeOptions fast_opts() {
    EnvelopeOptions o;
    o.drive_grid = 48;
    o.voltage_grid = 48;
    o.steps_per_cycle = 96;
    o.settle_periods = 8;
    o.average_periods = 2;
    return o;
}

}  // namespace

TEST_CASE("zero-input discharge follows the analytic RC decay") {
    CircuitSpec spec = half_wave_reference(-13.0);  // R_L C_L = 10 us
    EnvelopeModel model(spec, 0.2, fast_opts());
    REQUIRE(model.v_max() > 0.3);
    const double rc = spec.load_resistance * spec.load_capacitance;
    const double v0 = 0.3;
    for (double t_us : {1.0, 10.0, 100.0}) {
        CircuitSpec s = spec;
        s.symbol_duration = t_us * 1e-6;
        EnvelopeModel m(s, 0.2, fast_opts());
        const SymbolResponse r = m.simulate(v0, 0.0);
        const double expect = v0 * std::exp(-s.symbol_duration / rc);
        CHECK(std::abs(r.final_voltage - expect) <= std::max(0.01 * expect, 2e-6));
    }
    // frozen values for T = 10 us: v = 0.3/e, P = (v0^2/R_L)(1 - e^-2)/2
    const SymbolResponse r = model.simulate(v0, 0.0);
    CHECK(r.final_voltage == doctest::Approx(0.110363832).epsilon(0.01));
    CHECK(r.average_power == doctest::Approx(3.89099123e-6).epsilon(0.01));
}

TEST_CASE("unexcited circuit stays at rest") {
    CircuitSpec spec = half_wave_reference(-13.0);
    EnvelopeModel model(spec, 0.05, fast_opts());
    const SymbolResponse r = model.simulate(0.0, 0.0);
    CHECK(r.final_voltage == doctest::Approx(0.0));
    CHECK(r.average_power == doctest::Approx(0.0));
}

TEST_CASE("final voltage is nondecreasing in the received amplitude") {
    for (double design : {-13.0, 0.0}) {
        CircuitSpec spec = half_wave_reference(design);
        const double r_max = 0.05;
        EnvelopeModel model(spec, r_max, fast_opts());
        for (double v0 : {0.0, 0.4 * model.v_max()}) {
            double prev = -1.0;
            for (int i = 0; i <= 24; ++i) {
                const double r_e = r_max * i / 24.0;
                const double vf = model.simulate(v0, r_e).final_voltage;
                CHECK(vf >= prev - 1e-6);
                prev = vf;
            }
        }
    }
}

TEST_CASE("saturation: responses stay within the calibrated ceiling") {
    CircuitSpec spec = half_wave_reference(-13.0);
    const double r_max = 0.1;
    EnvelopeModel model(spec, r_max, fast_opts());
    for (int i = 0; i <= 12; ++i)
        for (int j = 0; j <= 6; ++j) {
            const double r_e = r_max * i / 12.0;
            const double v0 = model.v_max() * j / 6.0;
            const SymbolResponse r = model.simulate(v0, r_e);
            CHECK(r.final_voltage <= model.v_max() + 1e-12);
            CHECK(r.final_voltage >= 0.0);
            CHECK(r.average_power >= 0.0);
        }
}

TEST_CASE("passivity: harvested energy is bounded by received plus stored energy") {
    CircuitSpec spec = half_wave_reference(-13.0);
    const double r_max = 0.1;
    EnvelopeModel model(spec, r_max, fast_opts());
    for (int i = 0; i <= 8; ++i)
        for (int j = 0; j <= 4; ++j) {
            const double r_e = r_max * i / 8.0;
            const double v0 = model.v_max() * j / 4.0;
            const SymbolResponse r = model.simulate(v0, r_e);
            const double stored = 0.5 * spec.load_capacitance * v0 * v0 / spec.symbol_duration;
            CHECK(r.average_power <= r_e * r_e + stored + 1e-12);
        }
}

TEST_CASE("full-wave rectifier saturates above the half-wave rectifier") {
    // drive past single-diode breakdown at the -13 dBm matched designs
    const double r_e = 0.2;  // 16 dBm received, source peak 4 V
    CircuitSpec hw = half_wave_reference(-13.0);
    CircuitSpec fw = full_wave_reference(-13.0);
    hw.symbol_duration = 5e-5;
    fw.symbol_duration = 5e-5;
    EnvelopeModel mh(hw, r_e, fast_opts());
    EnvelopeModel mf(fw, r_e, fast_opts());
    const double vh = mh.simulate(0.0, r_e).final_voltage;
    const double vf = mf.simulate(0.0, r_e).final_voltage;
    CHECK(vf >= vh);
    // the half-wave ceiling sits near the single-diode breakdown ceiling
    CHECK(mh.v_max() < mf.v_max());
}

TEST_CASE("envelope and transient backends agree at a down-scaled carrier") {
    CircuitSpec base = half_wave_reference(-13.0);
    CircuitSpec scaled = scaled_carrier(base, 100.0);  // 24.5 MHz carrier
    REQUIRE(scaled.carrier_frequency == doctest::Approx(2.45e7));
    EnvelopeModel model(scaled, 0.05, fast_opts());
    REQUIRE(model.v_max() > 0.08);
    TransientOptions topts;
    topts.steps_per_cycle = 256;
    for (double r_e : {0.005, 0.02, 0.05}) {
        for (double v0 : {0.0, 0.08}) {
            const SymbolResponse env = model.simulate(v0, r_e);
            const SymbolResponse tr = transient_simulate(scaled, v0, r_e, topts);
            const double scale = std::max(std::abs(tr.final_voltage), 0.02);
            CHECK(std::abs(env.final_voltage - tr.final_voltage) / scale < 0.03);
        }
    }
}

TEST_CASE("transient backend refuses full-rate runs beyond the step limit") {
    CircuitSpec spec = half_wave_reference(-13.0);
    spec.symbol_duration = 1e-4;  // 2.45e4 cycles/us symbol: 62.7M steps at 256/cycle
    CHECK_THROWS_AS(transient_simulate(spec, 0.0, 0.01), numerical_error);
}

TEST_CASE("matching-network scaling preserves the zero-input response") {
    CircuitSpec spec = scaled_carrier(half_wave_reference(-13.0), 100.0);
    TransientOptions topts;
    topts.steps_per_cycle = 200;
    const SymbolResponse r = transient_simulate(spec, 0.25, 0.0, topts);
    const double rc = spec.load_resistance * spec.load_capacitance;
    CHECK(r.final_voltage ==
          doctest::Approx(0.25 * std::exp(-spec.symbol_duration / rc)).epsilon(0.01));
}

TEST_CASE("datasets are reproducible and empty requests give empty lists") {
    CircuitSpec spec = half_wave_reference(-13.0);
    EnvelopeModel model(spec, 0.02, fast_opts());
    CHECK(generate_dataset(model, 0, 7).empty());
    const auto a = generate_dataset(model, 50, 7);
    const auto b = generate_dataset(model, 50, 7);
    REQUIRE(a.size() == 50);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].v_init == b[i].v_init);
        CHECK(a[i].r_e == b[i].r_e);
        CHECK(a[i].v_final == b[i].v_final);
        CHECK(a[i].p_avg == b[i].p_avg);
    }
    const auto c = generate_dataset(model, 50, 8);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i) any_diff |= a[i].v_init != c[i].v_init;
    CHECK(any_diff);
}

TEST_CASE("dataset CSV round-trips at 9 significant digits") {
    CircuitSpec spec = half_wave_reference(-13.0);
    EnvelopeModel model(spec, 0.02, fast_opts());
    const auto data = generate_dataset(model, 20, 3);
    const std::string csv = dataset_to_csv(data);
    CHECK(csv.rfind("v_init,r_E,v_final,p_avg\n", 0) == 0);
    const auto back = dataset_from_csv(csv);
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back[i].v_init == doctest::Approx(data[i].v_init).epsilon(1e-8));
        CHECK(back[i].p_avg == doctest::Approx(data[i].p_avg).epsilon(1e-8));
    }
}

TEST_CASE("spec validation rejects nonphysical parameters") {
    CircuitSpec spec = half_wave_reference(-13.0);
    spec.diode.ideality = 2.5;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = half_wave_reference(-13.0);
    spec.load_resistance = -1.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = half_wave_reference(-13.0);
    spec.matching.capacitance_c1 = 0.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}
