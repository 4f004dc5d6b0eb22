#include "sess/scenario_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sess {

namespace {

using ordered_json = nlohmann::ordered_json;

[[noreturn]] void bail(const std::string& where, const std::string& what) {
    throw std::runtime_error("scenario: " + where + ": " + what);
}

double get_number(const ordered_json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) bail(where, "missing field '" + key + "'");
    if (!j[key].is_number()) bail(where + "." + key, "expected a number");
    return j[key].get<double>();
}

std::vector<double> get_vector(const ordered_json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) bail(where, "missing field '" + key + "'");
    if (!j[key].is_array()) bail(where + "." + key, "expected an array of numbers");
    std::vector<double> v;
    v.reserve(j[key].size());
    for (const auto& x : j[key]) {
        if (!x.is_number()) bail(where + "." + key, "expected numbers only");
        v.push_back(x.get<double>());
    }
    return v;
}

ControllableLoad parse_load(const ordered_json& j, const std::string& where) {
    ControllableLoad l;
    l.id = j.value("id", "");
    l.start_slot = static_cast<int>(get_number(j, "start_slot", where));
    l.end_slot = static_cast<int>(get_number(j, "end_slot", where));
    l.total_energy = get_number(j, "total_energy", where);
    l.min_rate = get_number(j, "min_rate", where);
    l.max_rate = get_number(j, "max_rate", where);
    return l;
}

UserProfile parse_user(const ordered_json& j, const std::string& where) {
    UserProfile u;
    u.id = j.value("id", "");
    u.weight = get_number(j, "weight", where);
    u.fixed_load = get_vector(j, "fixed_load", where);
    u.renewable = get_vector(j, "renewable", where);
    if (!j.contains("cost_coeffs")) bail(where, "missing field 'cost_coeffs'");
    const auto& cc = j["cost_coeffs"];
    u.cost_coeffs.price = get_vector(cc, "price", where + ".cost_coeffs");
    if (cc.contains("quad")) u.cost_coeffs.quad = get_vector(cc, "quad", where + ".cost_coeffs");
    if (j.contains("controllable_loads")) {
        if (!j["controllable_loads"].is_array()) bail(where, "controllable_loads must be an array");
        int q = 0;
        for (const auto& lj : j["controllable_loads"]) {
            u.controllable_loads.push_back(
                parse_load(lj, where + ".controllable_loads[" + std::to_string(q) + "]"));
            ++q;
        }
    }
    return u;
}

} // namespace

ScenarioConfig parse_scenario(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("scenario: invalid JSON: ") + e.what());
    }
    ScenarioConfig cfg;
    cfg.description = j.value("description", "");
    cfg.horizon = static_cast<int>(get_number(j, "horizon", "$"));
    cfg.grid_cap = get_number(j, "grid_cap", "$");
    if (!j.contains("users") || !j["users"].is_array()) bail("$", "missing 'users' array");
    int m = 0;
    for (const auto& uj : j["users"]) {
        cfg.users.push_back(parse_user(uj, "users[" + std::to_string(m) + "]"));
        ++m;
    }
    if (!j.contains("shared_ess")) bail("$", "missing 'shared_ess'");
    const auto& ej = j["shared_ess"];
    auto& e = cfg.shared_ess;
    e.min_state = get_number(ej, "min_state", "shared_ess");
    e.max_state = get_number(ej, "max_state", "shared_ess");
    e.initial_state = get_number(ej, "initial_state", "shared_ess");
    e.max_charge_per_user = get_number(ej, "max_charge_per_user", "shared_ess");
    e.max_discharge_per_user = get_number(ej, "max_discharge_per_user", "shared_ess");
    e.charge_eff = get_number(ej, "charge_eff", "shared_ess");
    e.discharge_eff = get_number(ej, "discharge_eff", "shared_ess");
    if (j.contains("distributed_ess")) {
        if (!j["distributed_ess"].is_array()) bail("$", "distributed_ess must be an array");
        DistributedEssSpec spec;
        int i = 0;
        for (const auto& dj : j["distributed_ess"]) {
            const std::string where = "distributed_ess[" + std::to_string(i) + "]";
            EssUnitSpec d;
            d.min_state = get_number(dj, "min_state", where);
            d.max_state = get_number(dj, "max_state", where);
            d.initial_state = get_number(dj, "initial_state", where);
            d.max_charge = get_number(dj, "max_charge", where);
            d.max_discharge = get_number(dj, "max_discharge", where);
            d.charge_eff = get_number(dj, "charge_eff", where);
            d.discharge_eff = get_number(dj, "discharge_eff", where);
            spec.push_back(d);
            ++i;
        }
        cfg.distributed_ess = std::move(spec);
    }
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("scenario: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
    ordered_json j;
    if (!cfg.description.empty()) j["description"] = cfg.description;
    j["horizon"] = cfg.horizon;
    j["grid_cap"] = cfg.grid_cap;
    j["users"] = ordered_json::array();
    for (const auto& u : cfg.users) {
        ordered_json uj;
        uj["id"] = u.id;
        uj["weight"] = u.weight;
        uj["fixed_load"] = u.fixed_load;
        uj["renewable"] = u.renewable;
        ordered_json cc;
        cc["price"] = u.cost_coeffs.price;
        if (!u.cost_coeffs.quad.empty()) cc["quad"] = u.cost_coeffs.quad;
        uj["cost_coeffs"] = std::move(cc);
        uj["controllable_loads"] = ordered_json::array();
        for (const auto& l : u.controllable_loads) {
            ordered_json lj;
            lj["id"] = l.id;
            lj["start_slot"] = l.start_slot;
            lj["end_slot"] = l.end_slot;
            lj["total_energy"] = l.total_energy;
            lj["min_rate"] = l.min_rate;
            lj["max_rate"] = l.max_rate;
            uj["controllable_loads"].push_back(std::move(lj));
        }
        j["users"].push_back(std::move(uj));
    }
    ordered_json ej;
    const auto& e = cfg.shared_ess;
    ej["min_state"] = e.min_state;
    ej["max_state"] = e.max_state;
    ej["initial_state"] = e.initial_state;
    ej["max_charge_per_user"] = e.max_charge_per_user;
    ej["max_discharge_per_user"] = e.max_discharge_per_user;
    ej["charge_eff"] = e.charge_eff;
    ej["discharge_eff"] = e.discharge_eff;
    j["shared_ess"] = std::move(ej);
    if (cfg.distributed_ess) {
        j["distributed_ess"] = ordered_json::array();
        for (const auto& d : *cfg.distributed_ess) {
            ordered_json dj;
            dj["min_state"] = d.min_state;
            dj["max_state"] = d.max_state;
            dj["initial_state"] = d.initial_state;
            dj["max_charge"] = d.max_charge;
            dj["max_discharge"] = d.max_discharge;
            dj["charge_eff"] = d.charge_eff;
            dj["discharge_eff"] = d.discharge_eff;
            j["distributed_ess"].push_back(std::move(dj));
        }
    }
    return j.dump(2) + "\n";
}

void save_scenario(const ScenarioConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("scenario: cannot write '" + path + "'");
    out << scenario_to_json(cfg);
}

} // namespace sess
