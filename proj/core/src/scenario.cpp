// SPDX-License-Identifier: Apache-2.0

#include "mmw/scenario.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace mmw {

using nlohmann::json;

namespace {

const std::pair<Scheme, const char*> kSchemeNames[] = {
    {Scheme::IdealDbf, "ideal-dbf"},   {Scheme::Continuous, "continuous"},
    {Scheme::FixedQTd, "fixed-q-td"},  {Scheme::FixedQFd, "fixed-q-fd"},
    {Scheme::FixedQW, "fixed-qw"},
};

json vec_to_json(Vec2 v) { return json::array({v.x, v.y}); }

Vec2 vec_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
        throw std::invalid_argument("expected a [x, y] pair of numbers");
    }
    return {j[0].get<double>(), j[1].get<double>()};
}

json to_json(const ScenarioConfig& c) {
    json j;
    j["bs_position"] = vec_to_json(c.bs_position);
    json trajs = json::array();
    for (const Trajectory& t : c.ue_trajectories) {
        trajs.push_back({{"start", vec_to_json(t.start_position_m)},
                         {"velocity", vec_to_json(t.velocity_mps)}});
    }
    j["ue_trajectories"] = trajs;
    j["snapshot_position"] = c.snapshot_position ? vec_to_json(*c.snapshot_position) : json();
    j["M"] = c.m;
    j["K"] = c.k;
    j["N_s"] = c.n_s;
    j["N_c"] = c.n_c;
    j["N_cl"] = c.n_cl;
    j["S"] = c.s;
    j["L"] = c.l;
    j["L_eff"] = c.l_eff;
    j["N_sub"] = c.n_sub;
    j["t_p"] = c.t_p;
    j["t_c"] = c.t_c;
    j["N_d"] = c.n_d;
    j["P_t_db"] = c.p_t_db;
    j["P_r_db"] = c.p_r_db;
    j["carrier_ghz"] = c.carrier_ghz;
    j["bs_element_spacing"] = c.bs_element_spacing;
    j["ue_element_spacing"] = c.ue_element_spacing;
    j["coherence_time_s"] = c.coherence_time_s;
    j["beam_coherence_time_s"] = c.beam_coherence_time_s;
    j["num_blocks"] = c.num_blocks;
    j["sample_period_s"] = c.sample_period_s;
    j["reflection_loss_db"] = c.reflection_loss_db;
    j["reference_distance_m"] = c.reference_distance_m;
    j["trial_count"] = c.trial_count;
    j["master_seed"] = c.master_seed;
    j["fading_draws"] = c.fading_draws;
    j["se_subcarrier_stride"] = c.se_subcarrier_stride;
    j["threads"] = c.threads;
    json schemes = json::array();
    for (Scheme s : c.schemes) {
        schemes.push_back(scheme_name(s));
    }
    j["schemes"] = schemes;
    j["estimator"] = to_string(c.estimator);
    j["su_precoder"] = precoder_name(c.su_precoder);
    j["snr_points_db"] = c.snr_points_db;
    return j;
}

template <typename T>
T get_as(const json& v) {
    if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) {
            throw std::invalid_argument("expected an integer");
        }
        const auto x = v.get<long long>();
        if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
            throw std::invalid_argument("integer out of range");
        }
        return static_cast<int>(x);
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
            throw std::invalid_argument("expected a non-negative integer");
        }
        return v.get<std::uint64_t>();
    } else {
        if (!v.is_number()) {
            throw std::invalid_argument("expected a number");
        }
        return v.get<double>();
    }
}

using Setter = std::function<void(ScenarioConfig&, const json&)>;

template <typename T>
Setter field(T ScenarioConfig::*member) {
    return [member](ScenarioConfig& c, const json& v) { c.*member = get_as<T>(v); };
}

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"bs_position", [](ScenarioConfig& c, const json& v) { c.bs_position = vec_from_json(v); }},
        {"ue_trajectories",
         [](ScenarioConfig& c, const json& v) {
             if (!v.is_array()) {
                 throw std::invalid_argument("expected an array of trajectories");
             }
             c.ue_trajectories.clear();
             for (const json& t : v) {
                 if (!t.is_object() || !t.contains("start") || !t.contains("velocity") ||
                     t.size() != 2) {
                     throw std::invalid_argument(
                         "each trajectory needs exactly 'start' and 'velocity'");
                 }
                 c.ue_trajectories.push_back({vec_from_json(t["start"]), vec_from_json(t["velocity"])});
             }
         }},
        {"snapshot_position",
         [](ScenarioConfig& c, const json& v) {
             if (v.is_null()) {
                 c.snapshot_position.reset();
             } else {
                 c.snapshot_position = vec_from_json(v);
             }
         }},
        {"M", field(&ScenarioConfig::m)},
        {"K", field(&ScenarioConfig::k)},
        {"N_s", field(&ScenarioConfig::n_s)},
        {"N_c", field(&ScenarioConfig::n_c)},
        {"N_cl", field(&ScenarioConfig::n_cl)},
        {"S", field(&ScenarioConfig::s)},
        {"L", field(&ScenarioConfig::l)},
        {"L_eff", field(&ScenarioConfig::l_eff)},
        {"N_sub", field(&ScenarioConfig::n_sub)},
        {"t_p", field(&ScenarioConfig::t_p)},
        {"t_c", field(&ScenarioConfig::t_c)},
        {"N_d", field(&ScenarioConfig::n_d)},
        {"P_t_db", field(&ScenarioConfig::p_t_db)},
        {"P_r_db", field(&ScenarioConfig::p_r_db)},
        {"carrier_ghz", field(&ScenarioConfig::carrier_ghz)},
        {"bs_element_spacing", field(&ScenarioConfig::bs_element_spacing)},
        {"ue_element_spacing", field(&ScenarioConfig::ue_element_spacing)},
        {"coherence_time_s", field(&ScenarioConfig::coherence_time_s)},
        {"beam_coherence_time_s", field(&ScenarioConfig::beam_coherence_time_s)},
        {"num_blocks", field(&ScenarioConfig::num_blocks)},
        {"sample_period_s", field(&ScenarioConfig::sample_period_s)},
        {"reflection_loss_db", field(&ScenarioConfig::reflection_loss_db)},
        {"reference_distance_m", field(&ScenarioConfig::reference_distance_m)},
        {"trial_count", field(&ScenarioConfig::trial_count)},
        {"master_seed", field(&ScenarioConfig::master_seed)},
        {"fading_draws", field(&ScenarioConfig::fading_draws)},
        {"se_subcarrier_stride", field(&ScenarioConfig::se_subcarrier_stride)},
        {"threads", field(&ScenarioConfig::threads)},
        {"schemes",
         [](ScenarioConfig& c, const json& v) {
             if (!v.is_array()) {
                 throw std::invalid_argument("expected an array of scheme names");
             }
             c.schemes.clear();
             for (const json& s : v) {
                 if (!s.is_string()) {
                     throw std::invalid_argument("scheme names must be strings");
                 }
                 c.schemes.push_back(parse_scheme(s.get<std::string>()));
             }
         }},
        {"estimator",
         [](ScenarioConfig& c, const json& v) {
             if (!v.is_string()) {
                 throw std::invalid_argument("expected \"FD\" or \"TD\"");
             }
             c.estimator = parse_estimator(v.get<std::string>());
         }},
        {"su_precoder",
         [](ScenarioConfig& c, const json& v) {
             if (!v.is_string()) {
                 throw std::invalid_argument("expected \"svd\" or \"mmse\"");
             }
             c.su_precoder = parse_precoder(v.get<std::string>());
         }},
        {"snr_points_db",
         [](ScenarioConfig& c, const json& v) {
             if (!v.is_array()) {
                 throw std::invalid_argument("expected an array of numbers");
             }
             c.snr_points_db.clear();
             for (const json& x : v) {
                 c.snr_points_db.push_back(get_as<double>(x));
             }
         }},
    };
    return table;
}

bool finite(Vec2 v) { return std::isfinite(v.x) && std::isfinite(v.y); }

} // namespace

const char* scheme_name(Scheme s) {
    for (const auto& [id, name] : kSchemeNames) {
        if (id == s) {
            return name;
        }
    }
    return "unknown";
}

Scheme parse_scheme(const std::string& name) {
    for (const auto& [id, n] : kSchemeNames) {
        if (name == n) {
            return id;
        }
    }
    throw InvalidInput("unknown scheme '" + name + "'");
}

std::vector<Scheme> all_schemes() {
    std::vector<Scheme> out;
    for (const auto& entry : kSchemeNames) {
        out.push_back(entry.first);
    }
    return out;
}

const char* precoder_name(PrecoderKind p) { return p == PrecoderKind::Svd ? "svd" : "mmse"; }

PrecoderKind parse_precoder(const std::string& name) {
    if (name == "svd") {
        return PrecoderKind::Svd;
    }
    if (name == "mmse") {
        return PrecoderKind::Mmse;
    }
    throw InvalidInput("unknown precoder '" + name + "'");
}

EstimatorKind parse_estimator(const std::string& name) {
    if (name == "FD" || name == "fd") {
        return EstimatorKind::FD;
    }
    if (name == "TD" || name == "td") {
        return EstimatorKind::TD;
    }
    throw InvalidInput("unknown estimator '" + name + "'");
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

std::vector<std::string> preset_names() { return {"desk", "full-scale"}; }

ScenarioConfig make_preset(const std::string& name, bool multi_user) {
    ScenarioConfig c;
    if (name == "desk") {
        if (multi_user) {
            c.ue_trajectories = {{{20.0, 10.0}, {0.0, 5.0}},
                                 {{17.0, 7.0}, {5.0, 0.0}},
                                 {{14.0, 10.0}, {3.5355339059327378, 3.5355339059327378}}};
        }
        return c;
    }
    if (name == "full-scale") {
        c.m = 64;
        c.k = 16;
        c.n_s = 3;
        c.n_c = 4;
        c.n_cl = 3;
        c.s = 512;
        c.l = 6;
        c.l_eff = 6;
        c.t_p = 16;
        c.p_t_db = 10.0;
        c.p_r_db = 10.0;
        c.trial_count = 50;
        c.se_subcarrier_stride = 16;
        c.snapshot_position = Vec2{20.0, 15.0};
        if (multi_user) {
            c.ue_trajectories = {{{8.0, 8.0}, {3.5355339059327378, 3.5355339059327378}},
                                 {{12.0, 4.0}, {5.0, 0.0}},
                                 {{10.0, 15.0}, {0.0, 5.0}}};
        }
        return c;
    }
    throw InvalidInput("unknown preset '" + name + "'");
}

std::vector<std::string> validation_errors(const ScenarioConfig& c) {
    std::vector<std::string> v;
    auto need = [&v](bool ok, const std::string& msg) {
        if (!ok) {
            v.push_back(msg);
        }
    };
    need(c.m >= 1, "M must be >= 1");
    need(c.k >= 1, "K must be >= 1");
    need(c.n_s >= 1, "N_s must be >= 1");
    need(c.n_s <= c.n_c, "N_s must be <= N_c");
    need(c.n_c <= c.k, "N_c must be <= K");
    need(c.n_s <= c.m, "N_s must be <= M");
    need(c.k <= c.m, "K must be <= M (per-user MMSE precoding inverts a K x M estimate)");
    need(c.n_cl >= 0, "N_cl must be >= 0");
    need(c.l >= 1, "L must be >= 1");
    need(c.l <= c.s, "L must be <= S");
    need(c.n_sub >= 1 && c.s % std::max(c.n_sub, 1) == 0, "S must be divisible by N_sub");
    need(c.l_eff >= c.l, "L_eff must be >= L");
    need(c.n_sub >= 1 && c.l_eff <= c.s / std::max(c.n_sub, 1), "L_eff must be <= S / N_sub");
    need(c.t_p >= c.k, "t_p must be >= K");
    need(c.t_p >= c.n_c, "t_p must be >= N_c");
    need(c.t_c > c.t_p + c.n_s, "t_c must exceed t_p + N_s");
    need(c.n_d >= 1, "N_d must be >= 1");
    need(std::isfinite(c.p_t_db), "P_t_db must be finite");
    need(std::isfinite(c.p_r_db), "P_r_db must be finite");
    need(c.carrier_ghz > 0.0, "carrier_ghz must be > 0");
    need(c.bs_element_spacing > 0.0, "bs_element_spacing must be > 0");
    need(c.ue_element_spacing > 0.0, "ue_element_spacing must be > 0");
    need(c.num_blocks >= 1, "num_blocks must be >= 1");
    need(c.sample_period_s > 0.0, "sample_period_s must be > 0");
    need(std::isfinite(c.reflection_loss_db), "reflection_loss_db must be finite");
    need(c.reference_distance_m >= 1.0, "reference_distance_m must be >= 1");
    need(c.trial_count >= 1, "trial_count must be >= 1");
    need(c.fading_draws >= 2, "fading_draws must be >= 2");
    need(c.se_subcarrier_stride >= 1 && c.se_subcarrier_stride <= c.s,
         "se_subcarrier_stride must be in [1, S]");
    need(c.threads >= 1, "threads must be >= 1");
    need(!c.ue_trajectories.empty(), "ue_trajectories must hold at least one UE");
    need(finite(c.bs_position), "bs_position must be finite");
    for (std::size_t u = 0; u < c.ue_trajectories.size(); ++u) {
        const Trajectory& t = c.ue_trajectories[u];
        need(finite(t.start_position_m) && finite(t.velocity_mps),
             "ue_trajectories[" + std::to_string(u) + "] must be finite");
        need(!(t.start_position_m == c.bs_position),
             "ue_trajectories[" + std::to_string(u) + "] starts at the BS position");
    }
    if (c.snapshot_position) {
        need(finite(*c.snapshot_position), "snapshot_position must be finite");
    }
    for (double x : c.snr_points_db) {
        need(std::isfinite(x), "snr_points_db entries must be finite");
    }
    try {
        BlockClock clock(c.coherence_time_s, c.beam_coherence_time_s);
        (void)clock;
    } catch (const Error& e) {
        v.push_back(std::string("T_B / T_C must be a positive integer (") + e.what() + ")");
    }
    if (c.l >= 1 && c.l <= c.s && c.k >= 1 && c.n_c >= 1) {
        const int ports = std::max(c.k, c.n_c);
        const int cap = td_offset_capacity(c.s, c.l);
        need(ports <= cap, "TD pilots need " + std::to_string(ports) +
                               " distinct tone offsets but S, L provide " + std::to_string(cap));
    }
    if (c.n_sub >= 1 && c.s % c.n_sub == 0 && c.l_eff >= 1 && c.l_eff <= c.s / c.n_sub &&
        c.n_c >= 1) {
        const int s_sub = c.s / c.n_sub;
        const int cap = td_offset_capacity(s_sub, c.l_eff);
        if (c.n_c > cap) {
            v.push_back("effective-channel TD pilots need " + std::to_string(c.n_c) +
                        " offsets but S / N_sub, L_eff provide " + std::to_string(cap));
        } else {
            try {
                const std::vector<int> idx = td_subband_pilot_indices(c.s, c.n_sub, c.l_eff, 0);
                TdReconstructor rec(c.s, std::vector<int>(idx.begin(), idx.begin() + c.l_eff), 0,
                                    s_sub);
                (void)rec;
            } catch (const Error& e) {
                v.push_back(std::string("subband TD grid unusable: ") + e.what());
            }
        }
    }
    return v;
}

void validate(const ScenarioConfig& cfg) {
    std::vector<std::string> v = validation_errors(cfg);
    if (!v.empty()) {
        throw ConfigError(std::move(v));
    }
}

std::string to_json_string(const ScenarioConfig& cfg, int indent) {
    return to_json(cfg).dump(indent);
}

ScenarioConfig config_from_json_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
    }
    if (!j.is_object()) {
        throw ConfigError({"config must be a JSON object"});
    }
    ScenarioConfig c;
    std::vector<std::string> errors;
    const auto& table = setters();
    for (const auto& [key, value] : j.items()) {
        const auto it = table.find(key);
        if (it == table.end()) {
            errors.push_back("unknown key '" + key + "'");
            continue;
        }
        try {
            it->second(c, value);
        } catch (const std::exception& e) {
            errors.push_back("'" + key + "': " + e.what());
        }
    }
    if (!errors.empty()) {
        throw ConfigError(std::move(errors));
    }
    return c;
}

ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open config file '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json_string(buf.str());
}

std::string config_hash(const ScenarioConfig& cfg) {
    const std::string text = to_json_string(cfg);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

} // namespace mmw
