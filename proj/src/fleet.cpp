#include "rruc/fleet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "rruc/errors.hpp"
#include "rruc/random.hpp"
#include "rruc/text.hpp"

namespace rruc {

namespace {

constexpr const char* kCsvColumns[] = {"id",           "p_min_mw",         "p_max_mw",
                                       "a_usd_per_mw2h", "b_usd_per_mwh",  "c_usd_per_h",
                                       "startup_usd",  "first_step_price", "max_step_price"};
constexpr std::size_t kRequiredColumns = 6;

[[noreturn]] void bad_unit(const Generator& g, const std::string& field, const std::string& why) {
    throw InputError("generator '" + g.id + "': " + field + " " + why);
}

std::string optional_field(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string{};
}

}  // namespace

void validate(const Generator& g) {
    if (g.id.empty()) throw InputError("generator with empty id");
    auto finite = [&](double v, const char* name) {
        if (!std::isfinite(v)) bad_unit(g, name, "is not finite");
    };
    finite(g.p_min, "p_min");
    finite(g.p_max, "p_max");
    finite(g.a, "a");
    finite(g.b, "b");
    finite(g.c, "c");
    finite(g.startup_cost, "startup_cost");
    if (g.p_min < 0.0) bad_unit(g, "p_min", "must be >= 0 (got " + format_double(g.p_min) + ")");
    if (g.p_max <= 0.0) bad_unit(g, "p_max", "must be > 0 (got " + format_double(g.p_max) + ")");
    if (g.p_min > g.p_max)
        bad_unit(g, "p_min",
                 "exceeds p_max (" + format_double(g.p_min) + " > " + format_double(g.p_max) + ")");
    if (g.a < 0.0) bad_unit(g, "a", "must be >= 0 (got " + format_double(g.a) + ")");
    if (g.b < 0.0) bad_unit(g, "b", "must be >= 0 (got " + format_double(g.b) + ")");
}

double Fleet::total_p_max() const noexcept {
    double s = 0.0;
    for (const auto& g : generators) s += g.p_max;
    return s;
}

double Fleet::total_p_min() const noexcept {
    double s = 0.0;
    for (const auto& g : generators) s += g.p_min;
    return s;
}

void validate(const Fleet& fleet) {
    std::unordered_set<std::string> ids;
    for (const auto& g : fleet.generators) {
        validate(g);
        if (!ids.insert(g.id).second) throw InputError("duplicate generator id '" + g.id + "'");
    }
    if (!std::isfinite(fleet.sigma_d) || fleet.sigma_d < 0.0)
        throw InputError("sigma_d must be >= 0 (got " + format_double(fleet.sigma_d) + ")");
    if (!std::isfinite(fleet.demand) || fleet.demand < 0.0)
        throw InputError("demand must be >= 0 (got " + format_double(fleet.demand) + ")");
}

ReserveRequirement reserve_requirement(const Fleet& fleet) {
    if (fleet.empty()) throw InputError("reserve requirement of an empty fleet");
    double largest = 0.0;
    for (const auto& g : fleet.generators) largest = std::max(largest, g.p_max);
    return {fleet.demand + 3.0 * fleet.sigma_d + largest};
}

ReserveRequirement reserve_requirement(const Fleet& fleet, std::span<const std::uint8_t> u,
                                       ReserveScope scope) {
    if (scope == ReserveScope::Fleet) return reserve_requirement(fleet);
    if (fleet.empty()) throw InputError("reserve requirement of an empty fleet");
    double largest = 0.0;
    for (std::size_t i = 0; i < fleet.size(); ++i)
        if (u[i]) largest = std::max(largest, fleet.generators[i].p_max);
    return {fleet.demand + 3.0 * fleet.sigma_d + largest};
}

void apply_default_demand(Fleet& fleet, const DemandPolicy& policy) {
    fleet.demand = policy.load_fraction * fleet.total_p_max();
    fleet.sigma_d = policy.sigma_fraction * fleet.demand;
}

FleetFormat format_from_path(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return ext == ".json" ? FleetFormat::Json : FleetFormat::Csv;
}

Fleet parse_fleet_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::map<std::string, std::size_t> col;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") != std::string::npos) break;
    }
    if (line_no == 0 || line.find_first_not_of(" \t\r") == std::string::npos)
        throw InputError("fleet CSV: missing header");
    auto header = split_csv_line(line);
    for (std::size_t i = 0; i < header.size(); ++i) {
        const auto& name = header[i];
        if (std::find(std::begin(kCsvColumns), std::end(kCsvColumns), name) == std::end(kCsvColumns))
            throw InputError("fleet CSV: unknown column '" + name + "'");
        if (!col.emplace(name, i).second) throw InputError("fleet CSV: duplicate column '" + name + "'");
    }
    for (std::size_t i = 0; i < kRequiredColumns; ++i)
        if (!col.count(kCsvColumns[i]))
            throw InputError(std::string("fleet CSV: missing required column '") + kCsvColumns[i] + "'");

    Fleet fleet;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != header.size())
            throw InputError("fleet CSV line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        auto where = [&](const char* name) {
            return std::string(name) + " (line " + std::to_string(line_no) + ")";
        };
        auto num = [&](const char* name) { return parse_double(fields[col.at(name)], where(name)); };
        auto opt = [&](const char* name) -> std::optional<double> {
            auto it = col.find(name);
            if (it == col.end() || fields[it->second].empty()) return std::nullopt;
            return parse_double(fields[it->second], where(name));
        };
        Generator g;
        g.id = fields[col.at("id")];
        g.p_min = num("p_min_mw");
        g.p_max = num("p_max_mw");
        g.a = num("a_usd_per_mw2h");
        g.b = num("b_usd_per_mwh");
        g.c = num("c_usd_per_h");
        g.startup_cost = opt("startup_usd").value_or(0.0);
        g.first_step_price = opt("first_step_price");
        g.max_step_price = opt("max_step_price");
        fleet.generators.push_back(std::move(g));
    }
    apply_default_demand(fleet);
    validate(fleet);
    return fleet;
}

Fleet parse_fleet_json(const std::string& text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw InputError(std::string("fleet JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("generators") || !doc["generators"].is_array())
        throw InputError("fleet JSON: expected an object with a 'generators' array");

    auto number = [](const json& obj, const char* key, const std::string& ctx) -> std::optional<double> {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) return std::nullopt;
        if (!it->is_number()) throw InputError("fleet JSON: " + ctx + " field '" + key + "' is not a number");
        return it->get<double>();
    };

    Fleet fleet;
    std::size_t index = 0;
    for (const auto& item : doc["generators"]) {
        const std::string ctx = "generator #" + std::to_string(index++);
        if (!item.is_object()) throw InputError("fleet JSON: " + ctx + " is not an object");
        auto req = [&](const char* key) {
            auto v = number(item, key, ctx);
            if (!v) throw InputError("fleet JSON: " + ctx + " missing '" + key + "'");
            return *v;
        };
        Generator g;
        if (!item.contains("id") || !item["id"].is_string())
            throw InputError("fleet JSON: " + ctx + " missing string 'id'");
        g.id = item["id"].get<std::string>();
        g.p_min = req("p_min_mw");
        g.p_max = req("p_max_mw");
        g.a = req("a_usd_per_mw2h");
        g.b = req("b_usd_per_mwh");
        g.c = req("c_usd_per_h");
        g.startup_cost = number(item, "startup_usd", ctx).value_or(0.0);
        g.first_step_price = number(item, "first_step_price", ctx);
        g.max_step_price = number(item, "max_step_price", ctx);
        fleet.generators.push_back(std::move(g));
    }
    apply_default_demand(fleet);
    if (auto d = number(doc, "demand_mw", "fleet")) {
        fleet.demand = *d;
        fleet.sigma_d = DemandPolicy{}.sigma_fraction * *d;
    }
    if (auto s = number(doc, "sigma_d_mw", "fleet")) fleet.sigma_d = *s;
    validate(fleet);
    return fleet;
}

Fleet load_fleet(const std::filesystem::path& path, FleetFormat format) {
    const auto text = read_file(path);
    try {
        return format == FleetFormat::Json ? parse_fleet_json(text) : parse_fleet_csv(text);
    } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

std::string to_csv(const Fleet& fleet) {
    std::string out;
    for (std::size_t i = 0; i < std::size(kCsvColumns); ++i) {
        if (i) out += ',';
        out += kCsvColumns[i];
    }
    out += '\n';
    for (const auto& g : fleet.generators) {
        out += g.id + ',' + format_double(g.p_min) + ',' + format_double(g.p_max) + ',' +
               format_double(g.a) + ',' + format_double(g.b) + ',' + format_double(g.c) + ',' +
               format_double(g.startup_cost) + ',' + optional_field(g.first_step_price) + ',' +
               optional_field(g.max_step_price) + '\n';
    }
    return out;
}

std::string to_json_text(const Fleet& fleet) {
    nlohmann::ordered_json doc;
    doc["demand_mw"] = fleet.demand;
    doc["sigma_d_mw"] = fleet.sigma_d;
    auto& gens = doc["generators"] = nlohmann::ordered_json::array();
    for (const auto& g : fleet.generators) {
        nlohmann::ordered_json item;
        item["id"] = g.id;
        item["p_min_mw"] = g.p_min;
        item["p_max_mw"] = g.p_max;
        item["a_usd_per_mw2h"] = g.a;
        item["b_usd_per_mwh"] = g.b;
        item["c_usd_per_h"] = g.c;
        item["startup_usd"] = g.startup_cost;
        item["first_step_price"] = g.first_step_price ? nlohmann::ordered_json(*g.first_step_price) : nullptr;
        item["max_step_price"] = g.max_step_price ? nlohmann::ordered_json(*g.max_step_price) : nullptr;
        gens.push_back(std::move(item));
    }
    return doc.dump(2) + "\n";
}

void save_fleet(const Fleet& fleet, const std::filesystem::path& path, FleetFormat format) {
    write_file(path, format == FleetFormat::Json ? to_json_text(fleet) : to_csv(fleet));
}

Fleet replicate_fleet(const Fleet& fleet, int multiplier, double deviation, std::uint64_t seed) {
    if (multiplier < 1) throw InputError("replicate: multiplier must be >= 1");
    if (!(deviation >= 0.0 && deviation < 1.0)) throw InputError("replicate: deviation must be in [0, 1)");

    Rng rng(seed);
    auto factor = [&] { return uniform(rng, 1.0 - deviation, 1.0 + deviation); };

    Fleet out;
    out.generators.reserve(fleet.size() * static_cast<std::size_t>(multiplier));
    for (int r = 0; r < multiplier; ++r) {
        for (const auto& base : fleet.generators) {
            Generator g = base;
            g.id = base.id + "_r" + std::to_string(r);
            // Fixed draw order per unit: a, b, c, p_min, p_max.
            g.a = base.a * factor();
            g.b = base.b * factor();
            g.c = base.c * factor();
            g.p_min = base.p_min * factor();
            g.p_max = base.p_max * factor();
            g.p_min = std::min(g.p_min, g.p_max);
            out.generators.push_back(std::move(g));
        }
    }
    const double base_cap = fleet.total_p_max();
    const double scale = base_cap > 0.0 ? out.total_p_max() / base_cap : 1.0;
    out.demand = fleet.demand * scale;
    out.sigma_d = fleet.sigma_d * scale;
    validate(out);
    return out;
}

Fleet synthetic_fleet(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Fleet fleet;
    fleet.generators.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Generator g;
        g.id = "u" + std::to_string(i);
        const double shape = uniform01(rng);
        if (shape < 0.1) {
            g.p_max = uniform(rng, 200.0, 300.0);
            g.p_min = uniform(rng, 24.0, 60.0);
        } else if (shape < 0.2) {
            g.p_max = uniform(rng, 20.0, 50.0);
            g.p_min = uniform(rng, 5.0, 15.0);
        } else {
            g.p_max = uniform(rng, 50.0, 100.0);
            g.p_min = uniform(rng, 20.0, 24.0);
        }
        g.b = uniform(rng, 20.0, 150.0);
        // Marginal cost at P_max rises by up to 120% over b.
        g.a = uniform01(rng) < 0.15 ? 0.0 : uniform(rng, 0.0, 0.6) * g.b / g.p_max;
        g.c = uniform(rng, 200.0, 1500.0);
        g.startup_cost = uniform(rng, 0.0, 1.0) < 0.7 ? uniform(rng, 0.0, 100.0) : uniform(rng, 100.0, 6000.0);
        g.first_step_price = g.marginal_cost(g.p_min);
        g.max_step_price = g.marginal_cost(g.p_max);
        fleet.generators.push_back(std::move(g));
    }
    apply_default_demand(fleet);
    validate(fleet);
    return fleet;
}

}  // namespace rruc
