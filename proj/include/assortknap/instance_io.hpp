#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "assortknap/errors.hpp"
#include "assortknap/model.hpp"

namespace assortknap {

namespace detail {

inline std::vector<double> number_array(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw InputError("instance file missing key '" + key + "'");
    const auto& arr = j.at(key);
    if (!arr.is_array()) throw InputError("instance key '" + key + "' must be an array");
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) throw InputError("instance key '" + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline int positive_int(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw InputError("instance file missing key '" + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw InputError("instance key '" + key + "' must be an integer");
    return v.get<int>();
}

} // namespace detail

inline ModelInstance instance_from_json(const nlohmann::json& j) {
    static const char* known[] = {"n_products",  "n_resources", "cardinality_cap",
                                  "horizon",     "revenues",    "preferences",
                                  "consumption", "initial_inventory"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known) ok = ok || (it.key() == k);
        if (!ok) throw InputError("instance file has unknown key '" + it.key() + "'");
    }
    return ModelInstance(detail::positive_int(j, "n_products"),
                         detail::positive_int(j, "n_resources"),
                         detail::positive_int(j, "cardinality_cap"),
                         detail::positive_int(j, "horizon"),
                         detail::number_array(j, "revenues"),
                         detail::number_array(j, "preferences"),
                         detail::number_array(j, "consumption"),
                         detail::number_array(j, "initial_inventory"));
}

inline nlohmann::json instance_to_json(const ModelInstance& instance) {
    nlohmann::json j;
    j["n_products"] = instance.n_products();
    j["n_resources"] = instance.n_resources();
    j["cardinality_cap"] = instance.cardinality_cap();
    j["horizon"] = instance.horizon();
    j["revenues"] = instance.revenues();
    j["preferences"] = instance.preferences();
    j["consumption"] = instance.consumption(); // row-major N x M
    j["initial_inventory"] = instance.initial_inventory();
    return j;
}

inline ModelInstance load_instance(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open instance file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("malformed instance file " + path + ": " + e.what());
    }
    if (!j.is_object()) throw InputError("instance file must hold a JSON object");
    return instance_from_json(j);
}

inline void save_instance(const ModelInstance& instance, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write instance file: " + path);
    out << instance_to_json(instance).dump(2) << "\n";
}

} // namespace assortknap
