#include "aoi/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"

namespace aoi {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ValidationError("config: field '" + field + "': " + what);
}

void check_keys(const json& obj, const std::string& field, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) fail(field, "must be an object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
            fail(field.empty() ? key : field + "." + key, "unknown key");
    }
}

double get_number(const json& v, const std::string& field) {
    if (!v.is_number()) fail(field, "must be a number");
    return v.get<double>();
}

long long get_integer(const json& v, const std::string& field, long long min) {
    long long r = 0;
    if (v.is_number_integer()) {
        if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<long long>::max()))
            fail(field, "out of range");
        r = v.get<long long>();
    } else if (v.is_number_float()) {
        const double d = v.get<double>();
        if (!(std::floor(d) == d && std::abs(d) < 9e15)) fail(field, "must be an integer");
        r = static_cast<long long>(d);
    } else {
        fail(field, "must be an integer");
    }
    if (r < min) fail(field, "must be >= " + std::to_string(min));
    return r;
}

std::vector<long long> get_integer_list(const json& v, const std::string& field, long long min) {
    std::vector<long long> out;
    if (v.is_array()) {
        if (v.empty()) fail(field, "must not be empty");
        for (std::size_t i = 0; i < v.size(); ++i)
            out.push_back(get_integer(v[i], field + "[" + std::to_string(i) + "]", min));
    } else {
        out.push_back(get_integer(v, field, min));
    }
    if (std::set<long long>(out.begin(), out.end()).size() != out.size()) fail(field, "contains duplicates");
    return out;
}

std::vector<double> get_number_list(const json& v, const std::string& field) {
    if (!v.is_array()) fail(field, "must be an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(get_number(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
}

ChannelModel parse_channel(const json& v, const std::string& field) {
    check_keys(v, field, {"eta", "omega"});
    if (!v.contains("eta")) fail(field + ".eta", "required");
    if (!v.contains("omega")) fail(field + ".omega", "required");
    auto eta = get_number_list(v["eta"], field + ".eta");
    auto omega = get_number_list(v["omega"], field + ".omega");
    try {
        return ChannelModel(std::move(eta), std::move(omega));
    } catch (const ValidationError& e) {
        fail(field, e.what());
    }
}

json emit_channel(const ChannelModel& c) { return {{"eta", c.eta()}, {"omega", c.omega()}}; }

UserEntry parse_user(const json& v, const std::string& field) {
    check_keys(v, field, {"rho", "energy_budget", "channel"});
    UserEntry u;
    if (v.contains("rho") == v.contains("energy_budget")) fail(field, "give exactly one of rho and energy_budget");
    if (v.contains("rho")) {
        u.rho = get_number(v["rho"], field + ".rho");
        if (!(*u.rho >= 0.0)) fail(field + ".rho", "must be >= 0");
    } else {
        const auto& b = v["energy_budget"];
        if (b.is_string()) {
            if (b.get<std::string>() != "inf") fail(field + ".energy_budget", "must be a number or \"inf\"");
            u.energy_budget = std::numeric_limits<double>::infinity();
        } else {
            u.energy_budget = get_number(b, field + ".energy_budget");
            if (!(*u.energy_budget >= 0.0)) fail(field + ".energy_budget", "must be >= 0");
        }
    }
    if (v.contains("channel")) u.channel = parse_channel(v["channel"], field + ".channel");
    return u;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config: invalid JSON: ") + e.what());
    }
    check_keys(doc, "", {"schema", "channel", "users", "rho_ramp", "N", "M", "theta", "T", "seeds", "x_max",
                         "policies", "solver", "threads", "output_dir"});
    if (!doc.contains("schema")) fail("schema", "required");
    if (get_integer(doc["schema"], "schema", 0) != 1) fail("schema", "unsupported version (expected 1)");

    ExperimentConfig c;
    if (doc.contains("channel")) c.channel = parse_channel(doc["channel"], "channel");

    if (doc.contains("users") == doc.contains("rho_ramp")) fail("users", "give exactly one of users and rho_ramp");
    if (doc.contains("users")) {
        const auto& list = doc["users"];
        if (!list.is_array() || list.empty()) fail("users", "must be a non-empty array");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string field = "users[" + std::to_string(i) + "]";
            c.users.push_back(parse_user(list[i], field));
            if (!c.users.back().channel && !c.channel) fail(field + ".channel", "required (no document-level channel)");
        }
        const int n = static_cast<int>(c.users.size());
        if (doc.contains("N")) {
            const auto N = get_integer_list(doc["N"], "N", 1);
            if (N.size() != 1 || N[0] != n) fail("N", "must equal the number of users (" + std::to_string(n) + ")");
        }
        c.populations = {n};
    } else {
        const auto& r = doc["rho_ramp"];
        check_keys(r, "rho_ramp", {"start", "span"});
        RhoRamp ramp;
        if (r.contains("start")) ramp.start = get_number(r["start"], "rho_ramp.start");
        if (r.contains("span")) ramp.span = get_number(r["span"], "rho_ramp.span");
        if (!(ramp.start >= 0.0)) fail("rho_ramp.start", "must be >= 0");
        if (!(ramp.span >= 0.0)) fail("rho_ramp.span", "must be >= 0");
        c.rho_ramp = ramp;
        if (!c.channel) fail("channel", "required with rho_ramp");
        if (!doc.contains("N")) fail("N", "required with rho_ramp");
        for (long long n : get_integer_list(doc["N"], "N", 1)) {
            if (n > std::numeric_limits<int>::max()) fail("N", "out of range");
            c.populations.push_back(static_cast<int>(n));
        }
    }

    if (doc.contains("M") && doc.contains("theta")) fail("M", "give at most one of M and theta");
    if (doc.contains("M")) {
        c.bandwidths.clear();
        for (long long m : get_integer_list(doc["M"], "M", 1)) {
            if (m > std::numeric_limits<int>::max()) fail("M", "out of range");
            c.bandwidths.push_back(static_cast<int>(m));
        }
    }
    if (doc.contains("theta")) {
        c.theta = get_number(doc["theta"], "theta");
        if (!(*c.theta > 0.0 && *c.theta <= 1.0)) fail("theta", "must lie in (0, 1]");
    }
    if (doc.contains("T")) c.horizon = get_integer(doc["T"], "T", 1);
    if (doc.contains("seeds")) {
        const auto& s = doc["seeds"];
        const json list = s.is_array() ? s : json::array({s});
        if (list.empty()) fail("seeds", "must not be empty");
        c.seeds.clear();
        for (std::size_t i = 0; i < list.size(); ++i) {
            const std::string field = "seeds[" + std::to_string(i) + "]";
            if (!list[i].is_number_unsigned())
                fail(field, "must be a non-negative integer");
            c.seeds.push_back(list[i].get<std::uint64_t>());
        }
        if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size())
            fail("seeds", "contains duplicates");
    }
    if (doc.contains("x_max")) c.x_max = static_cast<int>(get_integer(doc["x_max"], "x_max", 2));
    if (doc.contains("policies")) {
        const auto& p = doc["policies"];
        if (!p.is_array() || p.empty()) fail("policies", "must be a non-empty array");
        c.policies.clear();
        for (std::size_t i = 0; i < p.size(); ++i) {
            const std::string field = "policies[" + std::to_string(i) + "]";
            if (!p[i].is_string()) fail(field, "must be a string");
            try {
                c.policies.push_back(parse_policy(p[i].get<std::string>()));
            } catch (const ValidationError& e) {
                fail(field, e.what());
            }
        }
        if (std::set<PolicyKind>(c.policies.begin(), c.policies.end()).size() != c.policies.size())
            fail("policies", "contains duplicates");
    }
    if (doc.contains("solver")) {
        const auto& s = doc["solver"];
        check_keys(s, "solver", {"eps", "max_iter", "step0"});
        if (s.contains("eps")) c.solver.eps = get_number(s["eps"], "solver.eps");
        if (s.contains("max_iter")) c.solver.max_iter = static_cast<int>(get_integer(s["max_iter"], "solver.max_iter", 1));
        if (s.contains("step0")) c.solver.step0 = get_number(s["step0"], "solver.step0");
        if (!(c.solver.eps > 0.0)) fail("solver.eps", "must be > 0");
        if (!(c.solver.step0 > 0.0)) fail("solver.step0", "must be > 0");
    }
    if (doc.contains("threads")) c.threads = static_cast<int>(get_integer(doc["threads"], "threads", 0));
    if (doc.contains("output_dir")) {
        if (!doc["output_dir"].is_string() || doc["output_dir"].get<std::string>().empty())
            fail("output_dir", "must be a non-empty string");
        c.output_dir = doc["output_dir"].get<std::string>();
    }

    // Every cell must be a valid network.
    if (c.theta) {
        for (int N : c.populations) {
            const double m = *c.theta * N;
            if (std::abs(m - std::round(m)) > 1e-9 || std::round(m) < 1)
                fail("theta", "theta * N must be a positive integer (N = " + std::to_string(N) + ")");
        }
    } else {
        for (int N : c.populations)
            for (int M : c.bandwidths)
                if (M > N) fail("M", "M = " + std::to_string(M) + " exceeds N = " + std::to_string(N));
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open '" + path.string() + "'");
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string emit_config(const ExperimentConfig& c) {
    json doc = json::object();
    doc["schema"] = 1;
    if (c.channel) doc["channel"] = emit_channel(*c.channel);
    if (c.rho_ramp) {
        doc["rho_ramp"] = {{"start", c.rho_ramp->start}, {"span", c.rho_ramp->span}};
    } else {
        json users = json::array();
        for (const auto& u : c.users) {
            json e = json::object();
            if (u.rho) e["rho"] = *u.rho;
            if (u.energy_budget) {
                if (std::isinf(*u.energy_budget)) e["energy_budget"] = "inf";
                else e["energy_budget"] = *u.energy_budget;
            }
            if (u.channel) e["channel"] = emit_channel(*u.channel);
            users.push_back(e);
        }
        doc["users"] = users;
    }
    doc["N"] = c.populations;
    if (c.theta) doc["theta"] = *c.theta;
    else doc["M"] = c.bandwidths;
    doc["T"] = c.horizon;
    doc["seeds"] = c.seeds;
    if (c.x_max) doc["x_max"] = *c.x_max;
    json policies = json::array();
    for (PolicyKind k : c.policies) policies.push_back(std::string(policy_name(k)));
    doc["policies"] = policies;
    doc["solver"] = {{"eps", c.solver.eps}, {"max_iter", c.solver.max_iter}, {"step0", c.solver.step0}};
    doc["threads"] = c.threads;
    doc["output_dir"] = c.output_dir;
    return doc.dump(2) + "\n";
}

std::vector<Cell> sweep_cells(const ExperimentConfig& c) {
    std::vector<Cell> cells;
    for (int N : c.populations) {
        if (c.theta) {
            cells.push_back({N, static_cast<int>(std::lround(*c.theta * N))});
        } else {
            for (int M : c.bandwidths) cells.push_back({N, M});
        }
    }
    std::sort(cells.begin(), cells.end());
    return cells;
}

NetworkSpec build_network(const ExperimentConfig& c, const Cell& cell) {
    std::vector<UserSpec> users;
    if (c.rho_ramp) {
        for (int n = 1; n <= cell.N; ++n) {
            const double rho = c.rho_ramp->start + c.rho_ramp->span * (n - 1) / cell.N;
            users.emplace_back(n - 1, *c.channel, rho * rr_min_power(*c.channel, cell.M, cell.N));
        }
    } else {
        if (static_cast<int>(c.users.size()) != cell.N) throw ValidationError("config: cell N does not match users");
        for (int n = 0; n < cell.N; ++n) {
            const auto& u = c.users[n];
            const ChannelModel& ch = u.channel ? *u.channel : *c.channel;
            const double budget = u.rho ? *u.rho * rr_min_power(ch, cell.M, cell.N) : *u.energy_budget;
            users.emplace_back(n, ch, budget);
        }
    }
    return NetworkSpec(std::move(users), cell.M);
}

}  // namespace aoi
