#pragma once

#include "dendro/chaos_checker.hpp"
#include "dendro/exact_builder.hpp"
#include "dendro/odometer.hpp"

#include <json.hpp>

#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace dendro::io {

using json = nlohmann::ordered_json;

/// Rationals travel as "p/q" strings.
inline json to_json(const Rational& r) { return to_string(r); }

inline Rational rational_from_json(const json& j) {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(j.get<long>());
    throw std::invalid_argument("expected a rational as \"p/q\", got " + j.dump());
}

inline json to_json(const PointRef& p) {
    if (p.is_vertex()) return json{{"vertex", p.vertex_id()}};
    return json{{"edge", p.edge_id()}, {"offset", to_string(p.offset())}};
}

inline PointRef point_from_json(const json& j) {
    if (!j.is_object()) throw std::invalid_argument("point must be an object");
    if (j.contains("vertex")) return PointRef::vertex(j.at("vertex").get<VertexId>());
    if (j.contains("edge")) return PointRef::on_edge(j.at("edge").get<EdgeId>(), rational_from_json(j.at("offset")));
    throw std::invalid_argument("point needs \"vertex\" or \"edge\"");
}

inline json to_json(const Dendrite& d) {
    json j;
    json ids = json::array();
    for (std::size_t v = 0; v < d.vertex_count(); ++v) ids.push_back(v);
    j["vertices"] = std::move(ids);
    json edges = json::array();
    for (const Edge& e : d.edges()) edges.push_back({{"u", e.u}, {"v", e.v}, {"len", to_string(e.length)}});
    j["edges"] = std::move(edges);
    json marked = json::object();
    for (const auto& [name, p] : d.marked()) marked[name] = to_json(p);
    j["marked"] = std::move(marked);
    if (d.descriptor()) {
        json params = json::object();
        for (const auto& [k, v] : d.descriptor()->params) params[k] = v;
        j["descriptor"] = {{"family", d.descriptor()->family}, {"params", std::move(params)}};
    }
    if (!d.coordinates().empty()) {
        json coords = json::array();
        for (const auto& [x, y] : d.coordinates()) coords.push_back(json::array({to_string(x), to_string(y)}));
        j["coordinates"] = std::move(coords);
    }
    return j;
}

inline Dendrite dendrite_from_json(const json& j) {
    if (!j.is_object() || !j.contains("vertices") || !j.contains("edges"))
        throw std::invalid_argument("dendrite needs \"vertices\" and \"edges\"");
    std::vector<Edge> edges;
    for (const json& e : j.at("edges")) {
        if (!e.is_object() || !e.contains("u") || !e.contains("v") || !e.contains("len"))
            throw std::invalid_argument("edge must be {\"u\", \"v\", \"len\"}");
        edges.push_back({e.at("u").get<VertexId>(), e.at("v").get<VertexId>(), rational_from_json(e.at("len"))});
    }
    // vertex ids must be exactly 0..n-1
    const json& ids = j.at("vertices");
    if (!ids.is_array()) throw std::invalid_argument("\"vertices\" must be a list of ids");
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i].get<std::size_t>() != i) throw std::invalid_argument("vertex ids must be 0..n-1 in order");
    std::map<std::string, PointRef> marked;
    if (j.contains("marked"))
        for (const auto& [name, p] : j.at("marked").items()) marked[name] = point_from_json(p);
    std::optional<GeneratorDescriptor> desc;
    if (j.contains("descriptor")) {
        GeneratorDescriptor g;
        g.family = j.at("descriptor").at("family").get<std::string>();
        if (j.at("descriptor").contains("params"))
            for (const auto& [k, v] : j.at("descriptor").at("params").items()) g.params[k] = v.get<std::string>();
        desc = std::move(g);
    }
    std::vector<PlanarPoint> coords;
    if (j.contains("coordinates"))
        for (const json& c : j.at("coordinates")) coords.push_back({rational_from_json(c.at(0)), rational_from_json(c.at(1))});
    return Dendrite(ids.size(), std::move(edges), std::move(marked), std::move(desc),
                    std::move(coords));
}

inline json to_json(const Subtree& s) {
    if (s.degenerate()) return json{{"point", to_json(*s.single_point())}};
    json spans = json::array();
    for (const Span& sp : s.spans()) spans.push_back(json::array({sp.edge, to_string(sp.lo), to_string(sp.hi)}));
    return json{{"spans", std::move(spans)}};
}

inline json to_json(const TreeMap& f) {
    json j;
    j["domain"] = to_json(f.domain());
    if (f.domain_ptr() != f.codomain_ptr()) j["codomain"] = to_json(f.codomain());
    json vimg = json::array();
    for (const PointRef& p : f.vertex_images()) vimg.push_back(to_json(p));
    j["vertex_images"] = std::move(vimg);
    json rules = json::array();
    for (std::size_t e = 0; e < f.domain().edge_count(); ++e) {
        EdgeRule r = f.rule(static_cast<EdgeId>(e));
        json knots = json::array(), images = json::array();
        for (const Rational& k : r.knots) knots.push_back(to_string(k));
        for (const PointRef& p : r.images) images.push_back(to_json(p));
        rules.push_back({{"knots", std::move(knots)}, {"images", std::move(images)}});
    }
    j["rules"] = std::move(rules);
    return j;
}

inline TreeMap map_from_json(const json& j) {
    if (!j.is_object() || !j.contains("domain") || !j.contains("vertex_images"))
        throw std::invalid_argument("map needs \"domain\" and \"vertex_images\"");
    auto dom = std::make_shared<const Dendrite>(dendrite_from_json(j.at("domain")));
    std::shared_ptr<const Dendrite> cod =
        j.contains("codomain") ? std::make_shared<const Dendrite>(dendrite_from_json(j.at("codomain"))) : dom;
    std::vector<PointRef> vimg;
    for (const json& p : j.at("vertex_images")) vimg.push_back(point_from_json(p));
    std::vector<EdgeRule> rules;
    if (j.contains("rules"))
        for (const json& r : j.at("rules")) {
            EdgeRule rule;
            for (const json& k : r.at("knots")) rule.knots.push_back(rational_from_json(k));
            for (const json& p : r.at("images")) rule.images.push_back(point_from_json(p));
            rules.push_back(std::move(rule));
        }
    return TreeMap(dom, cod, std::move(vimg), std::move(rules));
}

inline json to_json(const Record& r) { return {{"value", to_string(r.value)}, {"at", r.at}}; }

inline json to_json(const ChaosReport& rep) {
    json j;
    j["family"] = rep.family;
    j["params"] = {{"N", rep.params.n_max}, {"N0", rep.params.n0}, {"prox_tolerance", to_string(rep.params.prox_tolerance)}};
    j["prox_pass"] = rep.prox_pass;
    j["sens0_pass"] = rep.sens0_pass;
    j["eta_estimate"] = to_string(rep.eta_estimate);
    j["epsilon_bound"] = to_string(rep.epsilon_bound);
    j["generic_chaos_evidence"] = rep.generic_chaos_evidence;
    json prox = json::array();
    for (const auto& p : rep.prox) prox.push_back({{"first", p.first}, {"second", p.second}, {"record", to_json(p.record)}});
    j["prox"] = std::move(prox);
    json sens = json::array();
    for (const auto& s : rep.sens) sens.push_back({{"index", s.index}, {"label", s.label}, {"record", to_json(s.record)}});
    j["sens"] = std::move(sens);
    j["notes"] = rep.notes;
    return j;
}

inline json to_json(const LYCounts& c) {
    return {{"pairs", c.pairs},
            {"scrambling_evidence", c.scrambling_evidence},
            {"proximal_only", c.proximal_only},
            {"separated_only", c.separated_only},
            {"neither", c.neither}};
}

inline json optional_steps(const std::optional<std::size_t>& s) { return s ? json(*s) : json(nullptr); }

inline json to_json(const ExactCertificate& c) {
    json j;
    j["bushes_within_bound"] = c.bushes_within_bound;
    j["off_base_edges_covered"] = c.off_base_edges_covered;
    json bushes = json::array();
    for (const auto& b : c.bushes)
        bushes.push_back({{"index", b.index},
                          {"steps", optional_steps(b.steps)},
                          {"chain", b.chain},
                          {"chain_bound", b.chain_bound},
                          {"chain_strict", b.chain_strict}});
    j["bushes"] = std::move(bushes);
    json edges = json::array();
    for (const auto& e : c.edges)
        edges.push_back({{"edge", e.edge}, {"on_base", e.on_base}, {"steps", optional_steps(e.steps)}});
    j["edges"] = std::move(edges);
    j["pieces"] = {{"trapped_in_base", c.pieces.trapped_in_base},
                   {"contains_bush", c.pieces.contains_bush},
                   {"other", c.pieces.other}};
    return j;
}

/// Build manifest: weights, targets, lap counts per bush.
inline json manifest(const ExactBuild& b) {
    json j;
    json lambda = json::array();
    for (const Rational& l : b.lambda) lambda.push_back(to_string(l));
    j["lambda"] = std::move(lambda);
    j["deficit"] = to_string(b.deficit);
    json bushes = json::array();
    for (std::size_t k = 0; k < b.bush_maps.size(); ++k) {
        const BushMap& m = b.bush_maps[k];
        json e{{"index", k + 1}, {"kind", m.kind}, {"pieces", m.pieces}};
        if (k + 1 < b.plan.ell.size()) {
            e["ell"] = b.plan.ell[k + 1];
            e["members"] = b.plan.members[k + 1];
        }
        if (m.kind == "blowup") {
            e["route"] = m.route;
            e["j_plus"] = to_string(m.j_plus);
            e["start"] = to_string(m.start);
            e["nu_laps"] = m.nu_laps;
        }
        if (m.pair.ok) {
            e["pair_laps"] = m.pair.laps;
            e["pair_attempts"] = m.pair.attempts;
        }
        bushes.push_back(std::move(e));
    }
    j["bushes"] = std::move(bushes);
    return j;
}

inline json manifest(const GchBuild& g) {
    json j;
    j["center"] = to_json(g.center);
    json pieces = json::array();
    for (const GchPiece& p : g.pieces)
        pieces.push_back({{"set", to_json(p.set)}, {"base", to_json(p.base)}, {"bushes", p.bushes},
                          {"diameter", to_string(diameter(*g.dec.dendrite, p.set))}});
    j["pieces"] = std::move(pieces);
    json kinds = json::array();
    for (const BushMap& m : g.bush_maps) kinds.push_back(m.kind);
    j["bush_kinds"] = std::move(kinds);
    return j;
}

// ---------------------------------------------------------------------------
// Files and CSV

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
}

inline void write_json_file(const std::string& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

/// n, ell, diam for n = 0..N.
inline std::string trajectory_csv(const Address& alpha, std::size_t n_max) {
    std::ostringstream os;
    os << "n,ell,diam\n";
    auto ells = ell_traj(alpha, n_max);
    auto diams = fiber_diam_traj(alpha, n_max);
    for (std::size_t n = 0; n <= n_max; ++n) os << n << ',' << ells[n] << ',' << to_string(diams[n]) << '\n';
    return os.str();
}

inline std::string pattern_csv(const std::vector<Rect>& rects) {
    std::ostringstream os;
    os << "word,x0,x1,y0,y1\n";
    for (const Rect& r : rects)
        os << r.word << ',' << to_string(r.a) << ',' << to_string(r.b) << ',' << to_string(r.c) << ',' << to_string(r.d)
           << '\n';
    return os.str();
}

inline std::string sens_csv(const ChaosReport& rep) {
    std::ostringstream os;
    os << "index,label,sens,at\n";
    for (const auto& s : rep.sens) os << s.index << ',' << s.label << ',' << to_string(s.record.value) << ',' << s.record.at << '\n';
    return os.str();
}

}  // namespace dendro::io
