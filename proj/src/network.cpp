#include "gasdsr/network.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gasdsr/errors.hpp"

namespace gasdsr {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw ValidationError(path + ": " + msg);
}

const json& member(const json& obj, const std::string& key, const std::string& path) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw ParseError(path + ": missing required field '" + key + "'");
    }
    return *it;
}

double num(const json& obj, const std::string& key, const std::string& path) {
    const json& v = member(obj, key, path);
    if (!v.is_number()) {
        throw ParseError(path + "." + key + ": expected a number");
    }
    return v.get<double>();
}

double num_or(const json& obj, const std::string& key, double fallback) {
    auto it = obj.find(key);
    return (it != obj.end() && it->is_number()) ? it->get<double>() : fallback;
}

std::string str(const json& obj, const std::string& key, const std::string& path) {
    const json& v = member(obj, key, path);
    if (!v.is_string()) {
        throw ParseError(path + "." + key + ": expected a string");
    }
    return v.get<std::string>();
}

int default_segments(double length_m) {
    return static_cast<int>(std::ceil(length_m / 10000.0)) + 1;
}

} // namespace

int GasNetwork::find_node(const std::string& id) const {
    auto it = node_index.find(id);
    return it == node_index.end() ? -1 : it->second;
}

double GasNetwork::cross_section(int pipe) const {
    const double d = pipes[pipe].diameter;
    return kPi * d * d / 4.0;
}

double GasNetwork::friction_coeff(int pipe) const {
    const Pipe& p = pipes[pipe];
    double c = 8.0 * p.friction / (kPi * kPi * std::pow(p.diameter, 5));
    if (sound_speed_in_momentum) {
        c /= sound_speed * sound_speed;
    }
    return c;
}

double GasNetwork::compressor_flow_coeff(int node) const {
    const auto& comp = nodes[node].compressor;
    if (!comp) return 0.0;
    return comp->coeff_a * (std::pow(comp->ratio, comp->exponent_k) - 1.0);
}

double GasNetwork::effective_flow_cap() const {
    if (flow_cap > 0.0) return flow_cap;
    double total = 0.0;
    for (const auto& w : wells) {
        total += std::max(w.output, w.output_max.value_or(w.output));
    }
    return std::max(4.0 * total, 100.0);
}

void GasNetwork::finalize() {
    node_index.clear();
    for (size_t j = 0; j < nodes.size(); ++j) {
        const Node& n = nodes[j];
        std::string path = "nodes[" + std::to_string(j) + "]";
        if (n.id.empty()) fail(path + ".id", "empty id");
        if (!node_index.emplace(n.id, static_cast<int>(j)).second) {
            fail(path + ".id", "duplicate node id '" + n.id + "'");
        }
        if (!(n.density_min > 0.0)) fail(path + ".density_min", "must be > 0");
        if (!(n.density_min < n.density_max)) {
            fail(path + ".density_min", "must be < density_max");
        }
        if (n.compressor) {
            if (!(n.compressor->ratio >= 1.0)) fail(path + ".compressor.ratio", "must be >= 1");
            if (n.compressor->coeff_a < 0.0) fail(path + ".compressor.coeff_a", "must be >= 0");
        }
    }

    pipes_from.assign(nodes.size(), {});
    pipes_to.assign(nodes.size(), {});
    for (size_t k = 0; k < pipes.size(); ++k) {
        Pipe& p = pipes[k];
        std::string path = "pipes[" + std::to_string(k) + "]";
        if (p.from_node < 0 || p.from_node >= static_cast<int>(nodes.size())) {
            fail(path + ".from", "unknown node");
        }
        if (p.to_node < 0 || p.to_node >= static_cast<int>(nodes.size())) {
            fail(path + ".to", "unknown node");
        }
        if (p.from_node == p.to_node) fail(path, "pipe endpoints coincide");
        if (!(p.length > 0.0)) fail(path + ".length", "must be > 0");
        if (!(p.diameter > 0.0)) fail(path + ".diameter", "must be > 0");
        if (!(p.friction > 0.0)) fail(path + ".friction", "must be > 0");
        if (p.n_seg == 0) p.n_seg = default_segments(p.length);
        if (p.n_seg < 2) fail(path + ".n_seg", "need at least 2 segmentation points");
        pipes_from[p.from_node].push_back(static_cast<int>(k));
        pipes_to[p.to_node].push_back(static_cast<int>(k));
    }

    auto check_node_ref = [&](int node, const std::string& path) {
        if (node < 0 || node >= static_cast<int>(nodes.size())) fail(path, "unknown node");
    };
    wells_at.assign(nodes.size(), {});
    for (size_t k = 0; k < wells.size(); ++k) {
        const GasWell& w = wells[k];
        std::string path = "wells[" + std::to_string(k) + "]";
        check_node_ref(w.node, path + ".node");
        if (w.output_min && w.output_max && *w.output_min > *w.output_max) {
            fail(path + ".output_min", "exceeds output_max");
        }
        if (w.output_min && w.output < *w.output_min - 1e-9) {
            fail(path + ".output", "below output_min");
        }
        if (w.output_max && w.output > *w.output_max + 1e-9) {
            fail(path + ".output", "above output_max");
        }
        wells_at[w.node].push_back(static_cast<int>(k));
    }
    loads_at.assign(nodes.size(), {});
    for (size_t k = 0; k < loads.size(); ++k) {
        std::string path = "loads[" + std::to_string(k) + "]";
        check_node_ref(loads[k].node, path + ".node");
        if (loads[k].demand < 0.0) fail(path + ".demand", "must be >= 0");
        loads_at[loads[k].node].push_back(static_cast<int>(k));
    }
    units_at.assign(nodes.size(), {});
    for (size_t k = 0; k < units.size(); ++k) {
        const GasFiredUnit& u = units[k];
        std::string path = "units[" + std::to_string(k) + "]";
        check_node_ref(u.node, path + ".node");
        if (u.dispatch < 0.0) fail(path + ".dispatch", "must be >= 0");
        if (u.beta < 0.0) fail(path + ".beta", "must be >= 0");
        if (!(u.fuel_slope > 0.0)) fail(path + ".fuel_slope", "must be > 0");
        units_at[u.node].push_back(static_cast<int>(k));
    }

    if (!(sound_speed > 0.0)) fail("globals.sound_speed", "must be > 0");
    if (linepack_min < 0.0) fail("globals.linepack_min", "must be >= 0");

    // Connectivity over the undirected pipe graph.
    if (nodes.size() > 1) {
        std::vector<char> seen(nodes.size(), 0);
        std::deque<int> queue{0};
        seen[0] = 1;
        size_t reached = 1;
        while (!queue.empty()) {
            int j = queue.front();
            queue.pop_front();
            auto visit = [&](int other) {
                if (!seen[other]) {
                    seen[other] = 1;
                    ++reached;
                    queue.push_back(other);
                }
            };
            for (int k : pipes_from[j]) visit(pipes[k].to_node);
            for (int k : pipes_to[j]) visit(pipes[k].from_node);
        }
        if (reached != nodes.size()) fail("pipes", "network graph is not connected");
    }
}

ParticipationReport validate_participation(const GasNetwork& net) {
    ParticipationReport rep;
    std::vector<double> per_node(net.nodes.size(), 0.0);
    for (const auto& u : net.units) {
        rep.beta_sum += u.beta;
        per_node[u.node] += u.beta;
    }
    for (size_t j = 0; j < net.nodes.size(); ++j) {
        if (!net.units_at[j].empty()) {
            rep.per_node.emplace_back(net.nodes[j].id, per_node[j]);
        }
    }
    rep.warning = std::abs(rep.beta_sum - 1.0) > 1e-3;
    return rep;
}

namespace {

GasNetwork parse_json(const json& doc, const std::string& origin) {
    GasNetwork net;
    net.name = doc.value("name", origin);

    const json& globals = member(doc, "globals", origin);
    net.sound_speed = num_or(globals, "sound_speed", 350.0);
    net.linepack_min = num_or(globals, "linepack_min", 0.0);
    net.flow_cap = num_or(globals, "flow_cap", 0.0);
    net.sound_speed_in_momentum = globals.value("sound_speed_in_momentum", false);
    net.linepack_printed_form = globals.value("linepack_printed_form", false);

    if (auto it = doc.find("initial"); it != doc.end()) {
        const json& init = *it;
        net.initial.reference_node = init.value("reference_node", std::string{});
        net.initial.reference_density = num_or(init, "reference_density", 0.0);
        auto read_map = [&](const char* key, std::vector<std::pair<std::string, double>>& out) {
            if (auto f = init.find(key); f != init.end()) {
                for (const auto& [id, value] : f->items()) {
                    out.emplace_back(id, value.get<double>());
                }
            }
        };
        read_map("wells", net.initial.well_outputs);
        read_map("loads", net.initial.load_demands);
        read_map("units", net.initial.unit_withdrawals);
    }

    std::unordered_map<std::string, int> ids;
    for (const json& jn : member(doc, "nodes", origin)) {
        std::string path = "nodes[" + std::to_string(net.nodes.size()) + "]";
        Node n;
        n.id = str(jn, "id", path);
        n.density_min = num(jn, "density_min", path);
        n.density_max = num(jn, "density_max", path);
        ids.emplace(n.id, static_cast<int>(net.nodes.size()));
        net.nodes.push_back(std::move(n));
    }
    auto node_ref = [&](const json& obj, const std::string& path) {
        std::string id = str(obj, "node", path);
        auto it = ids.find(id);
        if (it == ids.end()) fail(path + ".node", "unknown node '" + id + "'");
        return it->second;
    };

    if (auto it = doc.find("compressors"); it != doc.end()) {
        for (const json& jc : *it) {
            std::string path = "compressors[]";
            int node = node_ref(jc, path);
            if (net.nodes[node].compressor) {
                fail(path, "node '" + net.nodes[node].id + "' already has a compressor");
            }
            CompressorSpec c;
            c.ratio = num(jc, "ratio", path);
            c.coeff_a = num_or(jc, "coeff_a", 0.0);
            c.exponent_k = num_or(jc, "exponent_k", 0.0);
            net.nodes[node].compressor = c;
        }
    }

    for (const json& jp : member(doc, "pipes", origin)) {
        std::string path = "pipes[" + std::to_string(net.pipes.size()) + "]";
        Pipe p;
        p.id = str(jp, "id", path);
        std::string from = str(jp, "from", path);
        std::string to = str(jp, "to", path);
        auto fit = ids.find(from);
        auto tit = ids.find(to);
        if (fit == ids.end()) fail(path + ".from", "unknown node '" + from + "'");
        if (tit == ids.end()) fail(path + ".to", "unknown node '" + to + "'");
        p.from_node = fit->second;
        p.to_node = tit->second;
        p.length = num(jp, "length_km", path) * 1000.0; // normalize to SI
        p.diameter = num(jp, "diameter", path);
        p.friction = num_or(jp, "friction", 0.01);
        p.n_seg = static_cast<int>(num_or(jp, "n_seg", 0));
        net.pipes.push_back(std::move(p));
    }

    if (auto it = doc.find("wells"); it != doc.end()) {
        for (const json& jw : *it) {
            std::string path = "wells[" + std::to_string(net.wells.size()) + "]";
            GasWell w;
            w.id = str(jw, "id", path);
            w.node = node_ref(jw, path);
            w.output = num(jw, "output", path);
            if (jw.contains("output_min")) w.output_min = num(jw, "output_min", path);
            if (jw.contains("output_max")) w.output_max = num(jw, "output_max", path);
            net.wells.push_back(std::move(w));
        }
    }
    if (auto it = doc.find("loads"); it != doc.end()) {
        for (const json& jl : *it) {
            std::string path = "loads[" + std::to_string(net.loads.size()) + "]";
            GasLoad l;
            l.id = str(jl, "id", path);
            l.node = node_ref(jl, path);
            l.demand = num(jl, "demand", path);
            net.loads.push_back(std::move(l));
        }
    }
    if (auto it = doc.find("units"); it != doc.end()) {
        for (const json& ju : *it) {
            std::string path = "units[" + std::to_string(net.units.size()) + "]";
            GasFiredUnit u;
            u.id = str(ju, "id", path);
            u.node = node_ref(ju, path);
            u.dispatch = num(ju, "dispatch", path);
            u.beta = num(ju, "beta", path);
            u.fuel_slope = num_or(ju, "fuel_slope", 5.0);
            u.fuel_intercept = num_or(ju, "fuel_intercept", 0.0);
            net.units.push_back(std::move(u));
        }
    }

    net.finalize();
    return net;
}

} // namespace

GasNetwork parse_network(const std::string& json_text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
    return parse_json(doc, origin);
}

GasNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open network file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_network(buf.str(), path);
}

std::string serialize_network(const GasNetwork& net) {
    json doc;
    doc["name"] = net.name;
    json globals;
    globals["sound_speed"] = net.sound_speed;
    globals["linepack_min"] = net.linepack_min;
    if (net.flow_cap > 0.0) globals["flow_cap"] = net.flow_cap;
    globals["sound_speed_in_momentum"] = net.sound_speed_in_momentum;
    if (net.linepack_printed_form) globals["linepack_printed_form"] = true;
    doc["globals"] = std::move(globals);

    doc["nodes"] = json::array();
    json compressors = json::array();
    for (const auto& n : net.nodes) {
        json jn;
        jn["id"] = n.id;
        jn["density_min"] = n.density_min;
        jn["density_max"] = n.density_max;
        doc["nodes"].push_back(std::move(jn));
        if (n.compressor) {
            json jc;
            jc["node"] = n.id;
            jc["ratio"] = n.compressor->ratio;
            jc["coeff_a"] = n.compressor->coeff_a;
            jc["exponent_k"] = n.compressor->exponent_k;
            compressors.push_back(std::move(jc));
        }
    }
    if (!compressors.empty()) doc["compressors"] = std::move(compressors);

    if (!net.initial.reference_node.empty() || net.initial.reference_density > 0.0 ||
        !net.initial.well_outputs.empty() || !net.initial.load_demands.empty() ||
        !net.initial.unit_withdrawals.empty()) {
        json init;
        if (!net.initial.reference_node.empty()) {
            init["reference_node"] = net.initial.reference_node;
        }
        if (net.initial.reference_density > 0.0) {
            init["reference_density"] = net.initial.reference_density;
        }
        auto write_map = [&](const char* key,
                             const std::vector<std::pair<std::string, double>>& values) {
            if (values.empty()) return;
            json m;
            for (const auto& [id, value] : values) m[id] = value;
            init[key] = std::move(m);
        };
        write_map("wells", net.initial.well_outputs);
        write_map("loads", net.initial.load_demands);
        write_map("units", net.initial.unit_withdrawals);
        doc["initial"] = std::move(init);
    }

    doc["pipes"] = json::array();
    for (const auto& p : net.pipes) {
        json jp;
        jp["id"] = p.id;
        jp["from"] = net.nodes[p.from_node].id;
        jp["to"] = net.nodes[p.to_node].id;
        jp["length_km"] = p.length / 1000.0;
        jp["diameter"] = p.diameter;
        jp["friction"] = p.friction;
        jp["n_seg"] = p.n_seg;
        doc["pipes"].push_back(std::move(jp));
    }
    doc["wells"] = json::array();
    for (const auto& w : net.wells) {
        json jw;
        jw["id"] = w.id;
        jw["node"] = net.nodes[w.node].id;
        jw["output"] = w.output;
        if (w.output_min) jw["output_min"] = *w.output_min;
        if (w.output_max) jw["output_max"] = *w.output_max;
        doc["wells"].push_back(std::move(jw));
    }
    doc["loads"] = json::array();
    for (const auto& l : net.loads) {
        json jl;
        jl["id"] = l.id;
        jl["node"] = net.nodes[l.node].id;
        jl["demand"] = l.demand;
        doc["loads"].push_back(std::move(jl));
    }
    doc["units"] = json::array();
    for (const auto& u : net.units) {
        json ju;
        ju["id"] = u.id;
        ju["node"] = net.nodes[u.node].id;
        ju["dispatch"] = u.dispatch;
        ju["beta"] = u.beta;
        ju["fuel_slope"] = u.fuel_slope;
        ju["fuel_intercept"] = u.fuel_intercept;
        doc["units"].push_back(std::move(ju));
    }
    return doc.dump(2) + "\n";
}

void save_network(const GasNetwork& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write '" + path + "'");
    out << serialize_network(net);
}

void apply_schedule(GasNetwork& net, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open schedule file '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    auto find_by_id = [&](auto& items, const std::string& id, const char* kind) -> auto& {
        for (auto& item : items) {
            if (item.id == id) return item;
        }
        throw ValidationError(path + ": schedule references unknown " + std::string(kind) +
                              " '" + id + "'");
    };
    if (auto it = doc.find("wells"); it != doc.end()) {
        for (const json& jw : *it) {
            auto& w = find_by_id(net.wells, str(jw, "id", path), "well");
            w.output = num_or(jw, "output", w.output);
        }
    }
    if (auto it = doc.find("loads"); it != doc.end()) {
        for (const json& jl : *it) {
            auto& l = find_by_id(net.loads, str(jl, "id", path), "load");
            l.demand = num_or(jl, "demand", l.demand);
        }
    }
    if (auto it = doc.find("units"); it != doc.end()) {
        for (const json& ju : *it) {
            auto& u = find_by_id(net.units, str(ju, "id", path), "unit");
            u.dispatch = num_or(ju, "dispatch", u.dispatch);
            u.beta = num_or(ju, "beta", u.beta);
        }
    }
    net.finalize();
}

} // namespace gasdsr
