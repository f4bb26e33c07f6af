// fujita: command-line front end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fujita/fujita.hpp"

namespace fs = std::filesystem;
using namespace fujita;

namespace {

void print_json(const Json& j) { std::cout << j.dump(2) << '\n'; }

std::map<std::string, double> parse_kv(const std::vector<std::string>& items) {
  std::map<std::string, double> kv;
  for (const auto& it : items) {
    const auto eq = it.find('=');
    if (eq == std::string::npos) throw InvalidArgument("expected key=value, got '" + it + "'");
    kv[it.substr(0, eq)] = std::stod(it.substr(eq + 1));
  }
  return kv;
}

double need(const std::map<std::string, double>& kv, const std::string& key) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw InvalidArgument("missing parameter '" + key + "'");
  return it->second;
}

double get_or(const std::map<std::string, double>& kv, const std::string& key, double dflt) {
  const auto it = kv.find(key);
  return it == kv.end() ? dflt : it->second;
}

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

RadialProfile make_profile(const std::string& kind, const Params& P,
                           const std::map<std::string, double>& kv, GridPtr grid) {
  if (kind == "tent") return make_tent(need(kv, "height"), need(kv, "ra"), need(kv, "rb"), grid);
  FamilySpec f;
  f.kind = family_kind_from_string(kind);
  f.params = P;
  f.m = get_or(kv, "m", 1.0);
  f.eps = get_or(kv, "eps", 0.1);
  f.beta = get_or(kv, "beta", 0.5);
  f.amplitude = get_or(kv, "alpha", 1.0);
  if (f.kind == FamilyKind::IniDecay)
    f.L_star = kv.count("L_star") ? kv.at("L_star") : find_L_star_profile(P).L_star;
  return make_family(f, need(kv, "lambda"), grid);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radial Fujita equation laboratory"};
  app.require_subcommand(1);
  Params P;
  auto add_np = [&](CLI::App* c) {
    c->add_option("--n", P.n, "spatial dimension")->required();
    c->add_option("--p", P.p, "nonlinearity exponent")->required();
  };

  // exponents
  auto* exps = app.add_subcommand("exponents", "critical exponents and regime");
  add_np(exps);

  // profile make
  auto* prof = app.add_subcommand("profile", "initial-data constructors");
  prof->require_subcommand(1);
  auto* pmake = prof->add_subcommand("make", "sample a family member to CSV");
  add_np(pmake);
  std::string kind, out;
  std::vector<std::string> kv_items;
  double rmax = 50.0;
  std::size_t nodes = kDefaultGridNodes;
  pmake->add_option("--kind", kind,
                    "phi-ell|ini-decay|ini-gu|convex-pair|plateau-ramp|scale-steady|tent")
      ->required();
  pmake->add_option("--params", kv_items, "key=value pairs; lambda is the family parameter");
  pmake->add_option("--rmax", rmax);
  pmake->add_option("--nodes", nodes);
  pmake->add_option("--out", out)->required();

  // steady
  auto* steady = app.add_subcommand("steady", "regular steady states u_alpha");
  add_np(steady);
  double alpha = 1.0;
  steady->add_option("--alpha", alpha);
  steady->add_option("--rmax", rmax);
  steady->add_option("--nodes", nodes);
  steady->add_option("--out", out);
  auto* inter = steady->add_subcommand("intersections", "count intersections on (0, R]");
  std::string against = "singular";
  double R_inter = 1000.0, beta = 0.5;
  inter->add_option("--against", against, "singular|steady");
  inter->add_option("--alpha", alpha);
  inter->add_option("--beta", beta, "second amplitude for --against steady");
  inter->add_option("--R", R_inter);

  // selfsim
  auto* ss = app.add_subcommand("selfsim", "self-similar profiles and L*");
  add_np(ss);
  bool find_lstar = false;
  std::optional<double> a_opt;
  double ss_rmax = kSelfSimilarRmax;
  std::string ss_json;
  ss->add_flag("--find-lstar", find_lstar);
  ss->add_option("--a", a_opt);
  ss->add_option("--rmax", ss_rmax);
  ss->add_option("--nodes", nodes);
  ss->add_option("--out", out);
  ss->add_option("--json", ss_json, "where to write the L* result (default: stdout)");

  // evolve
  auto* ev = app.add_subcommand("evolve", "radial evolution with fate classification");
  add_np(ev);
  std::string ic, farfield = "frozen", mode = "physical";
  double tmax = 1.0;
  std::optional<double> balance;
  std::vector<double> snap_times;
  ev->add_option("--ic", ic, "initial profile CSV")->required();
  ev->add_option("--rmax", rmax)->required();
  ev->add_option("--nodes", nodes);
  ev->add_option("--tmax", tmax)->required();
  ev->add_option("--farfield", farfield)->check(CLI::IsMember({"frozen", "singular"}));
  ev->add_option("--mode", mode)->check(CLI::IsMember({"physical", "rescaled"}));
  ev->add_option("--snapshots", snap_times, "extra snapshot times");
  ev->add_option("--balance-from", balance, "well-balanced singular tail from this radius");
  ev->add_option("--out", out)->required();

  // threshold
  auto* th = app.add_subcommand("threshold", "bisection over a monotone family");
  add_np(th);
  std::string family;
  std::vector<double> range;
  double tol = 1e-3;
  int budget = 60;
  th->add_option("--family", family)
      ->required()
      ->check(CLI::IsMember({"phi-ell", "ini-decay", "ini-gu", "convex-pair", "plateau-ramp",
                             "scale-steady"}));
  th->add_option("--range", range)->required()->expected(2);
  th->add_option("--tol", tol, "absolute bracket width");
  th->add_option("--budget", budget);
  th->add_option("--params", kv_items, "family constants: m, eps, beta, alpha, L_star");
  th->add_option("--rmax", rmax);
  th->add_option("--nodes", nodes);
  th->add_option("--tmax", tmax);
  th->add_option("--mode", mode)->check(CLI::IsMember({"physical", "rescaled"}));
  th->add_option("--out", out)->required();

  // experiment
  auto* ex = app.add_subcommand("experiment", "scripted scenarios");
  ex->require_subcommand(1);
  auto* exrun = ex->add_subcommand("run", "run one scenario");
  std::string name;
  int stages = 1;
  std::optional<double> eps1, ex_beta, ex_tmax, ex_rmax, ex_tol;
  std::optional<std::size_t> ex_nodes;
  exrun->add_option("--name", name)->required();
  add_np(exrun);
  exrun->add_option("--stages", stages);
  exrun->add_option("--eps1", eps1, "first plateau height (exam_osc)");
  exrun->add_option("--beta", ex_beta, "lower steady state amplitude (exam_conv)");
  exrun->add_option("--tmax", ex_tmax);
  exrun->add_option("--rmax", ex_rmax);
  exrun->add_option("--nodes", ex_nodes);
  exrun->add_option("--tol", ex_tol);
  exrun->add_option("--out", out);
  auto* exlist = ex->add_subcommand("list", "list scenarios and their preconditions");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*exps) {
      print_json(exponents_json(P));
    } else if (*pmake) {
      validate(P);
      const auto grid = make_grid(RadialGrid::default_for(rmax, nodes));
      const auto u = make_profile(kind, P, parse_kv(kv_items), grid);
      ensure_parent(out);
      write_profile_csv(out, u);
    } else if (*inter) {
      const int z = against == "singular"
                        ? intersection_profile(P, alpha, AgainstSingular{}, R_inter)
                        : intersection_profile(P, alpha, AgainstSteady{beta}, R_inter);
      std::cout << z << '\n';
    } else if (*steady) {
      if (out.empty()) throw InvalidArgument("steady: --out is required");
      const auto s = shoot_steady(P, alpha, rmax, nodes);
      ensure_parent(out);
      write_profile_csv(out, s.profile);
    } else if (*ss) {
      if (find_lstar == a_opt.has_value())
        throw InvalidArgument("selfsim: give exactly one of --find-lstar and --a");
      double a = a_opt.value_or(0.0);
      if (find_lstar) {
        LStarOptions o;
        o.r_max = ss_rmax;
        const auto res = find_L_star_profile(P, o);
        const auto j = to_json(res);
        if (ss_json.empty()) {
          print_json(j);
        } else {
          ensure_parent(ss_json);
          std::ofstream(ss_json) << j.dump(2) << '\n';
        }
        if (!res.a_star.is_finite()) {
          if (!out.empty()) std::cerr << "a* = inf: no profile written\n";
          return 0;
        }
        a = res.a_star.value();
      }
      if (!out.empty()) {
        const auto prof = shoot_profile(P, a, ss_rmax, nodes);
        ensure_parent(out);
        write_profile_csv(out, prof.profile);
        if (!find_lstar) {
          Json j;
          j["a"] = a;
          j["positive"] = prof.positive;
          j["ell"] = json_optional(prof.ell);
          print_json(j);
        }
      }
    } else if (*ev) {
      SolverConfig cfg = default_config(rmax, tmax, nodes);
      cfg.far_field = far_field_from_string(farfield);
      cfg.mode = mode_from_string(mode);
      cfg.snapshot_times = snap_times;
      cfg.balance_from = balance;
      const auto u0 = profile_from_samples(read_profile_csv(ic), cfg.grid);
      const auto run = evolve(P, u0, cfg);
      const fs::path json_path(out);
      const fs::path dir = json_path.parent_path();
      const std::string stem = json_path.stem().string();
      fs::create_directories(dir.empty() ? fs::path(".") : dir);
      std::vector<std::string> files;
      for (std::size_t k = 0; k < run.snapshots.size(); ++k) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04zu.csv", k);
        const std::string rel = stem + "_snapshots/" + buf;
        fs::create_directories(dir / (stem + "_snapshots"));
        write_profile_csv((dir / rel).string(), run.snapshot_profile(k));
        files.push_back(rel);
      }
      std::ofstream(json_path) << run_json(run, cfg, files).dump(2) << '\n';
      std::cout << to_string(run.fate.tag) << ": " << run.fate.evidence << '\n';
    } else if (*th) {
      validate(P);
      const auto kv = parse_kv(kv_items);
      FamilySpec f;
      f.kind = family_kind_from_string(family);
      f.params = P;
      f.m = get_or(kv, "m", 1.0);
      f.eps = get_or(kv, "eps", 0.1);
      f.beta = get_or(kv, "beta", 0.5);
      f.amplitude = get_or(kv, "alpha", 1.0);
      if (f.kind == FamilyKind::IniDecay)
        f.L_star = kv.count("L_star") ? kv.at("L_star") : find_L_star_profile(P).L_star;
      SolverConfig cfg = default_config(rmax, tmax, nodes);
      cfg.mode = mode_from_string(mode);
      if (f.kind == FamilyKind::IniGU) {
        cfg.far_field = FarField::SingularTail;
        cfg.balance_from = 1.0;
      }
      const auto b = bisect_threshold(P, f, {range[0], range[1]}, tol, budget, cfg);
      Json j = to_json(b);
      j["family"] = family;
      j["n"] = P.n;
      j["p"] = P.p;
      j["config"] = config_json(cfg);
      ensure_parent(out);
      std::ofstream(out) << j.dump(2) << '\n';
      std::cout << "[" << b.lambda_lo << ", " << b.lambda_hi << "]"
                << (b.converged ? "" : " (not converged)") << '\n';
    } else if (*exlist) {
      for (auto s : all_scenarios())
        std::cout << to_string(s) << "\t" << scenario_precondition(s) << '\n';
    } else if (*exrun) {
      ExperimentSpec spec;
      spec.name = scenario_from_string(name);
      spec.params = P;
      spec.stage_count = stages;
      if (eps1) spec.eps1 = *eps1;
      if (ex_beta) spec.beta = *ex_beta;
      spec.overrides.t_max = ex_tmax;
      spec.overrides.r_max = ex_rmax;
      spec.overrides.nodes = ex_nodes;
      spec.overrides.tol = ex_tol;
      const auto rec = run_experiment(spec);
      if (spec.name == Scenario::RegimeReport)
        for (const auto& row : rec.table)
          std::cout << row.behavior << "\t" << row.cell
                    << (row.probed_by.empty() ? "" : "\t[" + row.probed_by + "]") << '\n';
      for (const auto& v : rec.verdicts)
        std::cout << to_string(v.status) << "\t" << v.claim << ": " << v.observed << '\n';
      if (!out.empty()) persist(rec, out);
      return exit_code(rec.overall());
    }
  } catch (const RegimeMismatch& e) {
    std::cerr << "regime mismatch: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
