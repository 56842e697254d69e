#include "swipt/scenario.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

namespace swipt {

using json = nlohmann::json;

double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
double watts_to_dbm(double watts) { return 10.0 * std::log10(watts / 1e-3); }

double Scenario::r_max() const { return std::sqrt(dbm_to_watts(peak_power_dbm)); }
double Scenario::ap_budget_watts() const { return dbm_to_watts(avg_power_dbm); }
double Scenario::noise_sigma_sq() const { return 0.5 * dbm_to_watts(noise_power_dbm); }

Constellation Scenario::constellation() const {
    return Constellation::uniform(constellation_size, r_max());
}

ChannelSpec Scenario::channel_spec() const {
    ChannelSpec ch;
    Rng rng(fading_seed);
    ch.h_i_mag = std::sqrt(pathloss_gain(ir_path, ir_fading, rng));
    ch.h_e_mag = std::sqrt(pathloss_gain(eh_path, eh_fading, rng));
    ch.sigma_sq = noise_sigma_sq();
    return ch;
}

void Scenario::validate() const {
    auto fail = [](const std::string& path, const std::string& why) {
        throw std::invalid_argument(path + ": " + why);
    };
    try {
        circuit.validate();
    } catch (const std::invalid_argument& e) {
        fail("circuit", e.what());
    }
    if (ir_path.distance_m < ir_path.reference_distance_m)
        fail("channel.ir.distance_m", "below the reference distance");
    if (eh_path.distance_m < eh_path.reference_distance_m)
        fail("channel.eh.distance_m", "below the reference distance");
    if (constellation_size < 2) fail("transmitter.constellation_size", "must be >= 2");
    if (peak_power_dbm < avg_power_dbm)
        fail("transmitter.avg_power_dbm", "exceeds the peak-power limit");
    if (state_count < 2) fail("mdp.state_count", "must be >= 2");
    if (subsamples < 1) fail("mdp.subsamples", "must be >= 1");
    if (mi_grid < 64) fail("mdp.mi_grid", "must be >= 64");
    if (backend != "circuit" && backend != "surrogate" && backend != "table")
        fail("backend", "must be one of circuit, surrogate, table");
    try {
        solver.validate();
    } catch (const std::invalid_argument& e) {
        fail("solver", e.what());
    }
}

namespace {

FadingSpec parse_fading(const json& j, const std::string& path) {
    FadingSpec f;
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "none") f.kind = FadingKind::None;
        else if (s == "rayleigh") f.kind = FadingKind::Rayleigh;
        else throw std::invalid_argument(path + ": unknown fading kind '" + s + "'");
    } else if (j.is_object() && j.contains("rician_k")) {
        f.kind = FadingKind::Rician;
        f.rician_k = j.at("rician_k").get<double>();
    } else {
        throw std::invalid_argument(path + ": expected \"none\", \"rayleigh\" or {\"rician_k\": x}");
    }
    return f;
}

json fading_to_json(const FadingSpec& f) {
    switch (f.kind) {
        case FadingKind::None: return "none";
        case FadingKind::Rayleigh: return "rayleigh";
        case FadingKind::Rician: return json{{"rician_k", f.rician_k}};
    }
    return "none";
}

}  // namespace

Scenario Scenario::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("scenario JSON: ") + e.what());
    }
    Scenario s;
    try {
        s.name = j.value("name", std::string("scenario"));

        const json& jc = j.at("circuit");
        const std::string topo = jc.value("topology", std::string("half_wave"));
        const double design_dbm = jc.value("matching_design_power_dbm", -13.0);
        if (topo == "half_wave") s.circuit = half_wave_reference(design_dbm);
        else if (topo == "full_wave_bridge") s.circuit = full_wave_reference(design_dbm);
        else throw std::invalid_argument("circuit.topology: unknown value '" + topo + "'");
        if (jc.contains("matching")) {
            const json& jm = jc.at("matching");
            s.circuit.matching.inductance_l1 = jm.at("inductance_l1_h").get<double>();
            s.circuit.matching.capacitance_c1 = jm.at("capacitance_c1_f").get<double>();
            if (jm.contains("capacitance_c2_f") && !jm.at("capacitance_c2_f").is_null())
                s.circuit.matching.capacitance_c2 = jm.at("capacitance_c2_f").get<double>();
            else
                s.circuit.matching.capacitance_c2.reset();
        }
        if (jc.contains("diode")) {
            const json& jd = jc.at("diode");
            s.circuit.diode.saturation_current =
                jd.value("saturation_current_a", s.circuit.diode.saturation_current);
            s.circuit.diode.ideality = jd.value("ideality", s.circuit.diode.ideality);
            s.circuit.diode.thermal_voltage =
                jd.value("thermal_voltage_v", s.circuit.diode.thermal_voltage);
            s.circuit.diode.series_resistance =
                jd.value("series_resistance_ohm", s.circuit.diode.series_resistance);
            s.circuit.diode.breakdown_voltage =
                jd.value("breakdown_voltage_v", s.circuit.diode.breakdown_voltage);
        }
        s.circuit.antenna_resistance = jc.value("antenna_resistance_ohm", 50.0);
        s.circuit.load_capacitance = jc.value("load_capacitance_f", 1e-9);
        s.circuit.load_resistance = jc.value("load_resistance_ohm", 1e4);
        s.circuit.carrier_frequency = jc.value("carrier_frequency_hz", 2.45e9);
        s.circuit.symbol_duration = jc.value("symbol_duration_s", 1e-5);

        const json& jch = j.at("channel");
        s.noise_power_dbm = jch.at("noise_power_dbm").get<double>();
        const double d0 = jch.value("reference_distance_m", 1.0);
        const json& jir = jch.at("ir");
        s.ir_path = {jir.value("pathloss_exponent", 3.0), jir.at("distance_m").get<double>(), d0,
                     s.circuit.carrier_frequency};
        s.ir_fading = jir.contains("fading") ? parse_fading(jir.at("fading"), "channel.ir.fading")
                                             : FadingSpec{};
        const json& jeh = jch.at("eh");
        s.eh_path = {jeh.value("pathloss_exponent", 2.0), jeh.at("distance_m").get<double>(), d0,
                     s.circuit.carrier_frequency};
        s.eh_fading = jeh.contains("fading") ? parse_fading(jeh.at("fading"), "channel.eh.fading")
                                             : FadingSpec{};
        s.fading_seed = jch.value("fading_seed", std::uint64_t{1});

        const json& jt = j.at("transmitter");
        s.peak_power_dbm = jt.at("peak_power_dbm").get<double>();
        s.avg_power_dbm = jt.at("avg_power_dbm").get<double>();
        s.constellation_size = jt.value("constellation_size", std::size_t{64});

        if (j.contains("mdp")) {
            const json& jm = j.at("mdp");
            s.state_count = jm.value("state_count", std::size_t{50});
            s.subsamples = jm.value("subsamples", std::size_t{32});
            s.mi_grid = jm.value("mi_grid", std::size_t{4096});
        }

        if (j.contains("solver")) {
            const json& js = j.at("solver");
            s.solver.i_req_bits = js.value("i_req_bits", 0.0);
            s.solver.eps_tol_initial = js.value("eps_tol_initial", 0.5);
            s.solver.eps_shrink = js.value("eps_shrink", 0.5);
            s.solver.m_max = js.value("m_max", std::size_t{15});
            s.solver.n_max = js.value("n_max", std::size_t{10});
            s.solver.inner_term_eps = js.value("inner_term_eps", 1e-7);
            s.solver.outer_term_eps = js.value("outer_term_eps", 1e-7);
            s.solver.fw_max_iters = js.value("fw_max_iters", std::size_t{400});
            s.solver.fw_rel_gap = js.value("fw_rel_gap", 1e-7);
            s.solver.lambda_bisect_tol = js.value("lambda_bisect_tol", 1e-9);
            s.solver.mi_match_tol_bits = js.value("mi_match_tol_bits", 1e-4);
        }
        s.solver.avg_power_budget = s.ap_budget_watts();

        s.backend = j.value("backend", std::string("circuit"));
        if (j.contains("seeds")) {
            s.dataset_seed = j.at("seeds").value("dataset", std::uint64_t{1});
            s.rollout_seed = j.at("seeds").value("rollout", std::uint64_t{1});
        }
        s.output_dir = j.value("output_dir", std::string("out"));
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("scenario JSON: ") + e.what());
    }
    s.validate();
    return s;
}

Scenario Scenario::load(const std::string& path) {
    return from_json_text(read_file(path));
}

std::string Scenario::to_json() const {
    json j;
    j["name"] = name;
    json jc;
    jc["topology"] =
        circuit.topology == RectifierTopology::HalfWave ? "half_wave" : "full_wave_bridge";
    jc["matching_design_power_dbm"] = watts_to_dbm(std::max(circuit.matching.design_power, 1e-30));
    jc["matching"] = {{"inductance_l1_h", circuit.matching.inductance_l1},
                      {"capacitance_c1_f", circuit.matching.capacitance_c1}};
    if (circuit.matching.capacitance_c2)
        jc["matching"]["capacitance_c2_f"] = *circuit.matching.capacitance_c2;
    jc["diode"] = {{"saturation_current_a", circuit.diode.saturation_current},
                   {"ideality", circuit.diode.ideality},
                   {"thermal_voltage_v", circuit.diode.thermal_voltage},
                   {"series_resistance_ohm", circuit.diode.series_resistance},
                   {"breakdown_voltage_v", circuit.diode.breakdown_voltage}};
    jc["antenna_resistance_ohm"] = circuit.antenna_resistance;
    jc["load_capacitance_f"] = circuit.load_capacitance;
    jc["load_resistance_ohm"] = circuit.load_resistance;
    jc["carrier_frequency_hz"] = circuit.carrier_frequency;
    jc["symbol_duration_s"] = circuit.symbol_duration;
    j["circuit"] = jc;
    j["channel"] = {{"noise_power_dbm", noise_power_dbm},
                    {"reference_distance_m", ir_path.reference_distance_m},
                    {"ir",
                     {{"pathloss_exponent", ir_path.exponent},
                      {"distance_m", ir_path.distance_m},
                      {"fading", fading_to_json(ir_fading)}}},
                    {"eh",
                     {{"pathloss_exponent", eh_path.exponent},
                      {"distance_m", eh_path.distance_m},
                      {"fading", fading_to_json(eh_fading)}}},
                    {"fading_seed", fading_seed}};
    j["transmitter"] = {{"peak_power_dbm", peak_power_dbm},
                        {"avg_power_dbm", avg_power_dbm},
                        {"constellation_size", constellation_size}};
    j["mdp"] = {{"state_count", state_count}, {"subsamples", subsamples}, {"mi_grid", mi_grid}};
    j["solver"] = {{"i_req_bits", solver.i_req_bits},
                   {"eps_tol_initial", solver.eps_tol_initial},
                   {"eps_shrink", solver.eps_shrink},
                   {"m_max", solver.m_max},
                   {"n_max", solver.n_max},
                   {"inner_term_eps", solver.inner_term_eps},
                   {"outer_term_eps", solver.outer_term_eps},
                   {"fw_max_iters", solver.fw_max_iters},
                   {"fw_rel_gap", solver.fw_rel_gap},
                   {"lambda_bisect_tol", solver.lambda_bisect_tol},
                   {"mi_match_tol_bits", solver.mi_match_tol_bits}};
    j["backend"] = backend;
    j["seeds"] = {{"dataset", dataset_seed}, {"rollout", rollout_seed}};
    j["output_dir"] = output_dir;
    return j.dump(2);
}

}  // namespace swipt
