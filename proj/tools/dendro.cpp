#include "dendro/counterexamples.hpp"
#include "dendro/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <iostream>
#include <string>

using namespace dendro;
using io::json;

namespace {

/// Failure with the stage that produced it.
struct StageError : std::runtime_error {
    std::string stage;
    StageError(std::string s, const std::string& what) : std::runtime_error(what), stage(std::move(s)) {}
};

template <typename F>
auto stage(const std::string& name, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

std::uint64_t default_seed() {
    if (const char* s = std::getenv("DENDRO_SEED")) {
        try {
            return std::stoull(s);
        } catch (const std::exception&) {
            throw StageError("config", std::string("DENDRO_SEED is not an integer: ") + s);
        }
    }
    return 1;
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") std::cout << text;
    else io::write_text_file(path, text);
}

PointRef marked_point(const Dendrite& d, const std::string& name) {
    if (!d.has_marked(name)) throw std::invalid_argument("no marked point named '" + name + "'");
    return d.marked(name);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Finite dendrite dynamics: generators, exact-map builder, chaos checks"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a dendrite truncation as JSON");
    std::string family, gen_out;
    std::map<std::string, std::string> gen_params;
    std::string p_depth, p_qmax, p_rank, p_arms, p_q, p_length, p_lengths;
    gen->add_option("family", family, "Family name")->required();
    gen->add_option("--depth", p_depth, "Truncation depth (comb, gehman)");
    gen->add_option("--qmax", p_qmax, "Largest denominator (riemann)");
    gen->add_option("--rank", p_rank, "Cantor rank (cantor_comb)");
    gen->add_option("--arms", p_arms, "Arm count (omega_star)");
    gen->add_option("--q", p_q, "Weight ratio (omega_star)");
    gen->add_option("--length", p_length, "Length (arc)");
    gen->add_option("--lengths", p_lengths, "Comma-separated arm lengths (star)");
    gen->add_option("-o,--out", gen_out, "Output file (default stdout)");

    // gallery list
    auto* gallery_cmd = app.add_subcommand("gallery", "Family catalogue");
    auto* gallery_list = gallery_cmd->add_subcommand("list", "List families with their ideal classification");
    gallery_cmd->require_subcommand(1);

    // build
    auto* build = app.add_subcommand("build", "Build maps");
    build->require_subcommand(1);
    auto* build_exact_cmd = build->add_subcommand("exact", "Exact map fixing a marked arc or point");
    std::string bx_dendrite, bx_arc, bx_point, bx_q = "1/2", bx_rho = "6/5", bx_out, bx_manifest;
    build_exact_cmd->add_option("--dendrite", bx_dendrite, "Dendrite JSON")->required();
    auto* arc_opt = build_exact_cmd->add_option("--arc", bx_arc, "Marked arc prefix X (uses X.0 and X.1)");
    build_exact_cmd->add_option("--point", bx_point, "Marked point name")->excludes(arc_opt);
    build_exact_cmd->add_option("--q", bx_q, "Weight ratio");
    build_exact_cmd->add_option("--rho", bx_rho, "Expansion factor");
    build_exact_cmd->add_option("-o,--out", bx_out, "Map JSON")->required();
    build_exact_cmd->add_option("--manifest", bx_manifest, "Build manifest JSON");

    auto* build_cx = build->add_subcommand("counterexample", "Counterexample assemblies");
    std::string cx_name, cx_out, cx_manifest;
    std::size_t cx_arms = 12, cx_depth = 12, cx_group = 2;
    build_cx->add_option("name", cx_name, "omega_star_gch | comb_gch | odometer_gehman")->required();
    build_cx->add_option("--arms", cx_arms, "Arms (omega_star_gch)");
    build_cx->add_option("--depth", cx_depth, "Depth (comb_gch, odometer_gehman)");
    build_cx->add_option("--group", cx_group, "Bushes per piece (comb_gch)");
    build_cx->add_option("-o,--out", cx_out, "Map JSON")->required();
    build_cx->add_option("--manifest", cx_manifest, "Build manifest JSON");

    // run
    auto* run = app.add_subcommand("run", "Run a scenario");
    std::string scenario, r_alpha = "1^inf", r_out, r_map, r_family = "balls", r_dendrite, r_arc, r_point;
    std::string r_q = "1/2", r_rho = "6/5", r_delta = "1/1000", r_eps = "1/10", r_system = "map", r_csv;
    std::size_t r_steps = 2187, r_N = 64, r_N0 = 0, r_levels = 6, r_samples = 16, r_nmax = 64, r_pairs = 100;
    std::uint64_t r_seed = 0;
    run->add_option("--scenario", scenario, "odometer-diam | gch-verdict | verdict | exactness | ly-sample")->required();
    run->add_option("--alpha", r_alpha, "Address literal, e.g. 21^inf");
    run->add_option("--steps", r_steps, "Trajectory length");
    run->add_option("--map", r_map, "Map JSON");
    run->add_option("--family", r_family, "balls | free_arcs | subdendrites");
    run->add_option("--N", r_N, "Horizon");
    run->add_option("--N0", r_N0, "Sensitivity window start");
    run->add_option("--levels", r_levels, "Ball radius levels");
    run->add_option("--samples", r_samples, "Random family members");
    run->add_option("--dendrite", r_dendrite, "Dendrite JSON");
    auto* r_arc_opt = run->add_option("--arc", r_arc, "Marked arc prefix");
    run->add_option("--point", r_point, "Marked point")->excludes(r_arc_opt);
    run->add_option("--q", r_q, "Weight ratio");
    run->add_option("--rho", r_rho, "Expansion factor");
    run->add_option("--nmax", r_nmax, "Cover horizon");
    run->add_option("--system", r_system, "map | odometer (ly-sample)");
    run->add_option("--pairs", r_pairs, "Sampled pairs (ly-sample)");
    run->add_option("--delta", r_delta, "Proximality threshold");
    run->add_option("--epsilon", r_eps, "Separation threshold");
    auto* seed_opt = run->add_option("--seed", r_seed, "Seed (default: DENDRO_SEED or 1)");
    run->add_option("--out", r_out, "Report file (default stdout)");
    run->add_option("--csv", r_csv, "Extra CSV output");

    // export-pattern
    auto* exp = app.add_subcommand("export-pattern", "Rectangle corners of X_depth as CSV");
    std::size_t e_depth = 1;
    std::string e_out;
    exp->add_option("--depth", e_depth, "Depth")->required();
    exp->add_option("-o,--out", e_out, "CSV file (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen->parsed()) {
            GeneratorDescriptor desc{family, {}};
            std::map<std::string, std::string*> opts{{"depth", &p_depth}, {"qmax", &p_qmax},     {"rank", &p_rank},
                                                     {"arms", &p_arms},   {"q", &p_q},           {"length", &p_length},
                                                     {"lengths", &p_lengths}};
            for (const auto& [k, v] : opts)
                if (!v->empty()) desc.params[k] = *v;
            Dendrite d = stage("generate", [&] { return gallery::generate(desc); });
            emit(gen_out, io::to_json(d).dump(2) + "\n");
            return 0;
        }
        if (gallery_list->parsed()) {
            for (const auto& f : gallery::families()) {
                auto c = gallery::classify(f);
                std::cout << f << " completely_regular=" << c.completely_regular
                          << " all_orders_finite=" << c.all_orders_finite << " in_theorem_class=" << c.in_theorem_class
                          << "\n";
            }
            return 0;
        }
        if (build_exact_cmd->parsed()) {
            Dendrite d = stage("load", [&] { return io::dendrite_from_json(io::read_json_file(bx_dendrite)); });
            Rational q = stage("config", [&] { return parse_rational(bx_q); });
            Rational rho = stage("config", [&] { return parse_rational(bx_rho); });
            ExactBuild b = stage("build", [&] {
                if (!bx_point.empty()) return build_exact(d, marked_point(d, bx_point), rho);
                std::string prefix = bx_arc.empty() ? "A" : bx_arc;
                return build_exact(d, marked_point(d, prefix + ".0"), marked_point(d, prefix + ".1"), q, rho);
            });
            io::write_json_file(bx_out, io::to_json(*b.map));
            if (!bx_manifest.empty()) io::write_json_file(bx_manifest, io::manifest(b));
            return 0;
        }
        if (build_cx->parsed()) {
            if (cx_name == "omega_star_gch" || cx_name == "comb_gch") {
                GchBuild g = stage("build", [&] {
                    return cx_name == "omega_star_gch" ? counterexamples::omega_star_gch(cx_arms)
                                                       : counterexamples::comb_gch(cx_depth, cx_group);
                });
                io::write_json_file(cx_out, io::to_json(*g.map));
                if (!cx_manifest.empty()) io::write_json_file(cx_manifest, io::manifest(g));
                return 0;
            }
            if (cx_name == "odometer_gehman") {
                GehmanExtension g = stage("build", [&] { return counterexamples::odometer_gehman(cx_depth); });
                io::write_json_file(cx_out, io::to_json(*g.map));
                if (!cx_manifest.empty()) {
                    json m{{"leaf_labels", g.leaf_labels}, {"leaf_permutation", g.leaf_permutation}};
                    io::write_json_file(cx_manifest, m);
                }
                return 0;
            }
            throw StageError("config", "unknown counterexample '" + cx_name + "' (cantor_shift is symbolic only)");
        }
        if (run->parsed()) {
            std::uint64_t seed = seed_opt->count() ? r_seed : default_seed();
            if (scenario == "odometer-diam") {
                Address alpha = stage("config", [&] { return Address::parse(r_alpha); });
                emit(r_out, io::trajectory_csv(alpha, r_steps));
                return 0;
            }
            if (scenario == "gch-verdict" || scenario == "verdict") {
                if (r_map.empty()) throw StageError("config", "--map is required");
                TreeMap f = stage("load", [&] { return io::map_from_json(io::read_json_file(r_map)); });
                SetFamily fam;
                fam.kind = stage("config", [&] { return parse_family_kind(r_family); });
                fam.radius_levels = r_levels;
                fam.samples = r_samples;
                fam.seed = seed;
                VerdictParams params{r_N, r_N0, Rational(0)};
                ChaosReport rep = stage("verdict", [&] { return verdict(f, fam, params); });
                json j = io::to_json(rep);
                j["seed"] = seed;
                emit(r_out, j.dump(2) + "\n");
                if (!r_csv.empty()) io::write_text_file(r_csv, io::sens_csv(rep));
                return rep.generic_chaos_evidence ? 0 : 2;
            }
            if (scenario == "exactness") {
                if (r_dendrite.empty()) throw StageError("config", "--dendrite is required");
                Dendrite d = stage("load", [&] { return io::dendrite_from_json(io::read_json_file(r_dendrite)); });
                Rational q = stage("config", [&] { return parse_rational(r_q); });
                Rational rho = stage("config", [&] { return parse_rational(r_rho); });
                ExactBuild b = stage("build", [&] {
                    if (!r_point.empty()) return build_exact(d, marked_point(d, r_point), rho);
                    std::string prefix = r_arc.empty() ? "A" : r_arc;
                    return build_exact(d, marked_point(d, prefix + ".0"), marked_point(d, prefix + ".1"), q, rho);
                });
                ExactCertificate cert = stage("verify", [&] { return verify_exact(b, r_nmax); });
                json j = io::to_json(cert);
                j["manifest"] = io::manifest(b);
                emit(r_out, j.dump(2) + "\n");
                return cert.bushes_within_bound && cert.off_base_edges_covered ? 0 : 2;
            }
            if (scenario == "ly-sample") {
                Rational delta = stage("config", [&] { return parse_rational(r_delta); });
                Rational eps = stage("config", [&] { return parse_rational(r_eps); });
                LYCounts c;
                if (r_system == "odometer") {
                    c = stage("sample", [&] { return ly_sample(OdometerSystem{}, r_pairs, r_N, delta, eps, seed); });
                } else {
                    if (r_map.empty()) throw StageError("config", "--map is required");
                    TreeMap f = stage("load", [&] { return io::map_from_json(io::read_json_file(r_map)); });
                    c = stage("sample", [&] { return ly_sample(TreeMapSystem{&f}, r_pairs, r_N, delta, eps, seed); });
                }
                json j = io::to_json(c);
                j["seed"] = seed;
                j["N"] = r_N;
                j["delta"] = to_string(delta);
                j["epsilon"] = to_string(eps);
                emit(r_out, j.dump(2) + "\n");
                return 0;
            }
            throw StageError("config", "unknown scenario '" + scenario + "'");
        }
        if (exp->parsed()) {
            auto rects = stage("pattern", [&] { return pattern(e_depth); });
            emit(e_out, io::pattern_csv(rects));
            return 0;
        }
    } catch (const StageError& e) {
        std::cerr << "error [" << e.stage << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error [io]: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
