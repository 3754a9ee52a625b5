#pragma once

// Feeder and DG-plan text formats.
//
// Feeder file: line-oriented sections, comma-separated fields, '#' comments.
//
//   [bases]     v_base_kv,s_base_mva
//   [buses]     id,kind,p_load_mw,q_load_mvar[,v_min_pu[,v_max_pu[,weight_k]]]
//   [branches]  id,from,to,r_pu_per_km,x_pu_per_km,length_km[,p_flow_max_pu]
//
// Missing voltage bounds default to 0.90 / 1.05 pu. Missing weights share the
// remaining weight budget equally among the load buses that omit them, so a
// file with no weights at all gets K_i = 1/N_load. Missing flow limits mean
// unlimited. Branches given as total per-unit impedance use length_km = 1.
//
// Plan file: one unit per line, `bus,p_mw,q_mvar[,p_min,p_max,q_min,q_max]`.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "dgplace/errors.hpp"
#include "dgplace/network.hpp"

namespace dgplace {

namespace io_detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] inline void fail(std::size_t line_no, const std::string& msg) {
    throw InputError("line " + std::to_string(line_no) + ": " + msg);
}

inline double parse_double(std::string_view field, std::size_t line_no, std::string_view what) {
    double value = 0.0;
    const char* first = field.data();
    const char* last = field.data() + field.size();
    if (!field.empty() && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (field.empty() || ec != std::errc{} || ptr != last)
        fail(line_no, "cannot parse " + std::string(what) + " from '" + std::string(field) + "'");
    return value;
}

inline int parse_int(std::string_view field, std::size_t line_no, std::string_view what) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
        fail(line_no, "cannot parse " + std::string(what) + " from '" + std::string(field) + "'");
    return value;
}

inline bool present(const std::vector<std::string_view>& f, std::size_t i) {
    return i < f.size() && !f[i].empty();
}

/// Shortest decimal text that parses back to the identical double.
inline std::string format_exact(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Yields (line number, content) with comments stripped and blank lines skipped.
template <typename Fn>
void for_each_content_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto end = text.find('\n', start);
        std::string_view line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (!line.empty()) fn(line_no, line);
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
}

}  // namespace io_detail

/// Parses feeder text into a validated Network. Throws InputError with the
/// offending line number, or with the list of invariant violations.
inline Network load_network(std::string_view text) {
    using namespace io_detail;
    enum class Section { none, bases, buses, branches };
    Section section = Section::none;
    Network net;
    bool have_bases = false;
    std::vector<Bus> buses;
    std::vector<bool> weight_given;
    std::set<int> bus_ids;
    std::set<int> branch_ids;

    for_each_content_line(text, [&](std::size_t line_no, std::string_view line) {
        if (line.front() == '[') {
            if (line == "[bases]") section = Section::bases;
            else if (line == "[buses]") section = Section::buses;
            else if (line == "[branches]") section = Section::branches;
            else fail(line_no, "unknown section " + std::string(line));
            return;
        }
        const auto f = split_fields(line);
        switch (section) {
        case Section::none:
            fail(line_no, "data before any section header");
        case Section::bases:
            if (have_bases) fail(line_no, "[bases] holds a single line");
            if (f.size() != 2) fail(line_no, "[bases] expects v_base_kv,s_base_mva");
            net.v_base = parse_double(f[0], line_no, "v_base_kv");
            net.s_base = parse_double(f[1], line_no, "s_base_mva");
            if (!(net.v_base > 0.0) || !(net.s_base > 0.0)) fail(line_no, "bases must be positive");
            have_bases = true;
            return;
        case Section::buses: {
            if (f.size() < 4 || f.size() > 7)
                fail(line_no, "[buses] expects id,kind,p_load_mw,q_load_mvar[,v_min_pu,v_max_pu,weight_k]");
            Bus b;
            b.id = parse_int(f[0], line_no, "bus id");
            if (!bus_ids.insert(b.id).second) fail(line_no, "duplicate bus id " + std::to_string(b.id));
            if (f[1] == "slack") b.kind = BusKind::slack;
            else if (f[1] == "load") b.kind = BusKind::load;
            else fail(line_no, "bus kind must be slack or load, got '" + std::string(f[1]) + "'");
            b.p_load = parse_double(f[2], line_no, "p_load_mw");
            b.q_load = parse_double(f[3], line_no, "q_load_mvar");
            if (present(f, 4)) b.v_min = parse_double(f[4], line_no, "v_min_pu");
            if (present(f, 5)) b.v_max = parse_double(f[5], line_no, "v_max_pu");
            if (present(f, 6)) b.weight_k = parse_double(f[6], line_no, "weight_k");
            weight_given.push_back(present(f, 6));
            buses.push_back(b);
            return;
        }
        case Section::branches: {
            if (f.size() < 6 || f.size() > 7)
                fail(line_no, "[branches] expects id,from,to,r_pu_per_km,x_pu_per_km,length_km[,p_flow_max_pu]");
            Branch br;
            br.id = parse_int(f[0], line_no, "branch id");
            if (!branch_ids.insert(br.id).second) fail(line_no, "duplicate branch id " + std::to_string(br.id));
            br.from_bus = parse_int(f[1], line_no, "from bus");
            br.to_bus = parse_int(f[2], line_no, "to bus");
            br.r_per_km = parse_double(f[3], line_no, "r_pu_per_km");
            br.x_per_km = parse_double(f[4], line_no, "x_pu_per_km");
            br.length_km = parse_double(f[5], line_no, "length_km");
            if (present(f, 6)) br.p_flow_max = parse_double(f[6], line_no, "p_flow_max_pu");
            net.branches.push_back(br);
            return;
        }
        }
    });

    if (!have_bases) throw InputError("missing [bases] section");
    if (buses.empty()) throw InputError("missing or empty [buses] section");

    // Default weights share whatever budget the explicit ones left over.
    double given_sum = 0.0;
    std::size_t missing = 0;
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (!buses[i].has_load()) continue;
        if (weight_given[i]) given_sum += buses[i].weight_k;
        else ++missing;
    }
    if (missing > 0) {
        const double share = (1.0 - given_sum) / static_cast<double>(missing);
        for (std::size_t i = 0; i < buses.size(); ++i)
            if (buses[i].has_load() && !weight_given[i]) buses[i].weight_k = share;
    }

    std::sort(buses.begin(), buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id != static_cast<int>(i) + 1)
            throw InputError("bus ids must be 1..N without gaps; bus " + std::to_string(i + 1) + " is missing");
    net.buses = std::move(buses);

    if (auto violations = validate(net); !violations.empty()) {
        std::string msg = "invalid network:";
        for (const auto& v : violations) msg += "\n  " + v;
        throw InputError(msg);
    }
    return net;
}

inline Network load_network_file(const std::string& path) { return load_network(io_detail::read_file(path)); }

/// Writes a network in the feeder format; load_network reads it back exactly.
/// DG injections are not part of the feeder format, so a network carrying
/// them is rejected.
inline std::string serialize_network(const Network& net) {
    using io_detail::format_exact;
    std::string out;
    out += "[bases]\n";
    out += format_exact(net.v_base) + "," + format_exact(net.s_base) + "\n";
    out += "[buses]\n";
    for (const Bus& b : net.buses) {
        if (b.p_gen != 0.0 || b.q_gen != 0.0)
            throw InputError("bus " + std::to_string(b.id) + " carries a DG injection; serialize the base network");
        out += std::to_string(b.id) + "," + (b.kind == BusKind::slack ? "slack" : "load") + "," +
               format_exact(b.p_load) + "," + format_exact(b.q_load) + "," + format_exact(b.v_min) + "," +
               format_exact(b.v_max) + "," + format_exact(b.weight_k) + "\n";
    }
    out += "[branches]\n";
    for (const Branch& br : net.branches) {
        out += std::to_string(br.id) + "," + std::to_string(br.from_bus) + "," + std::to_string(br.to_bus) + "," +
               format_exact(br.r_per_km) + "," + format_exact(br.x_per_km) + "," + format_exact(br.length_km) + "," +
               format_exact(br.p_flow_max) + "\n";
    }
    return out;
}

inline DGPlan parse_plan(std::string_view text) {
    using namespace io_detail;
    DGPlan plan;
    for_each_content_line(text, [&](std::size_t line_no, std::string_view line) {
        const auto f = split_fields(line);
        if (f.size() != 3 && f.size() != 7)
            fail(line_no, "plan line expects bus,p_mw,q_mvar[,p_min,p_max,q_min,q_max]");
        DGUnit u;
        u.bus = parse_int(f[0], line_no, "bus");
        u.p_gen = parse_double(f[1], line_no, "p_mw");
        u.q_gen = parse_double(f[2], line_no, "q_mvar");
        if (f.size() == 7) {
            u.p_min = parse_double(f[3], line_no, "p_min");
            u.p_max = parse_double(f[4], line_no, "p_max");
            u.q_min = parse_double(f[5], line_no, "q_min");
            u.q_max = parse_double(f[6], line_no, "q_max");
        }
        plan.units.push_back(u);
    });
    return plan;
}

/// Inline form used on the command line: `bus:p_mw:q_mvar` items separated by ';' or whitespace.
inline DGPlan parse_inline_plan(std::string_view text) {
    std::string rewritten;
    for (char c : text) rewritten += (c == ':') ? ',' : (c == ';' || c == ' ') ? '\n' : c;
    return parse_plan(rewritten);
}

inline std::string serialize_plan(const DGPlan& plan) {
    using io_detail::format_exact;
    std::string out = "# bus,p_mw,q_mvar,p_min,p_max,q_min,q_max\n";
    for (const DGUnit& u : plan.units) {
        out += std::to_string(u.bus) + "," + format_exact(u.p_gen) + "," + format_exact(u.q_gen) + "," +
               format_exact(u.p_min) + "," + format_exact(u.p_max) + "," + format_exact(u.q_min) + "," +
               format_exact(u.q_max) + "\n";
    }
    return out;
}

}  // namespace dgplace
