#include "cli.hpp"

#include <omp.h>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cqpolar/channel_io.hpp"
#include "cqpolar/code.hpp"
#include "cqpolar/decoder.hpp"
#include "cqpolar/errors.hpp"
#include "cqpolar/inequalities.hpp"
#include "cqpolar/mac.hpp"
#include "cqpolar/polarize.hpp"
#include "report.hpp"

namespace cqpolar::cli {

namespace {

using nlohmann::json;

// A check ran and at least one instance failed.
struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Channel given either as a file or as a named preset.
struct ChannelSource {
  std::string file;
  std::string preset;
  PresetParams p;

  void attach(CLI::App* app) {
    auto* f = app->add_option("--channel", file, "channel JSON file");
    auto* pr = app->add_option("--preset", preset, "preset name")
                   ->check(CLI::IsMember(preset_names()));
    f->excludes(pr);
    app->add_option("--q", p.q, "preset alphabet size");
    app->add_option("--k", p.k, "preset output dimension");
    app->add_option("--p", p.p, "crossover probability (classical-symmetric)");
    app->add_option("--lambda", p.lambda, "depolarizing weight (depolarized-orthogonal)");
    app->add_option("--eps", p.eps, "erasure probability (erasure)");
    app->add_option("--angles", p.angles, "state angles in radians (pure-states)")->delimiter(',');
    app->add_option("--preset-seed", p.seed, "seed for the random preset");
  }

  CqChannel load(RunManifest& m) const {
    if (!file.empty()) {
      const std::string bytes = read_file(file);
      m.input_hashes[file] = sha256_hex(bytes);
      json j;
      try {
        j = json::parse(bytes);
      } catch (const json::parse_error& e) {
        throw LoadError(file + ": " + e.what());
      }
      return load_channel(j);
    }
    if (preset.empty()) throw std::invalid_argument("give --channel FILE or --preset NAME");
    return make_preset(preset, p);
  }
};

// Every option of the subcommand, given or defaulted, as strings.
json collect_params(const CLI::App* app) {
  json j = json::object();
  for (const CLI::Option* o : app->get_options()) {
    const std::string name = o->get_single_name();
    if (name == "help") continue;
    if (o->count() > 0) {
      const auto& r = o->results();
      j[name] = r.size() == 1 ? json(r[0]) : json(r);
    } else if (!o->get_default_str().empty()) {
      j[name] = o->get_default_str();
    }
  }
  return j;
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-")
    out << content;
  else
    write_atomic(path, content);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::string csv_quote(const std::string& s) { return "\"" + s + "\""; }

FiniteAbelianGroup parse_group(const std::string& s) {
  std::vector<int> orders;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, 'x')) {
    try {
      std::size_t used = 0;
      int v = std::stoi(part, &used);
      if (used != part.size() || v < 1) throw std::invalid_argument("");
      orders.push_back(v);
    } catch (const std::exception&) {
      throw std::invalid_argument("bad group '" + s + "': use cyclic orders joined by 'x', e.g. 2x2");
    }
  }
  if (orders.empty()) throw std::invalid_argument("empty group");
  return FiniteAbelianGroup(orders);
}

// ---------------------------------------------------------------------------

struct Common {
  int threads = 0;
  bool bits = false;
};

double unit(const Common& c) { return c.bits ? 1.0 / std::log(2.0) : 1.0; }

int cmd_channel_validate(const std::string& path, const Common& c, const std::string& out_path, RunManifest& m,
                         std::ostream& out, std::ostream& err) {
  const std::string bytes = read_file(path);
  m.input_hashes[path] = sha256_hex(bytes);
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw LoadError(path + ": " + e.what());
  }
  const CqChannel w = load_channel(j);
  json r;
  r["valid"] = true;
  r["group"] = w.group().cyclic_orders();
  r["q"] = w.q();
  r["k"] = w.dim();
  r["units"] = c.bits ? "bits" : "nats";
  r["I"] = holevo_information(w) * unit(c);
  r["F"] = avg_fidelity(w);
  r["Fmax"] = f_max(w);
  r["manifest"] = m.to_json();
  emit(out_path, dump(r), out);
  err << path << ": valid, q = " << w.q() << ", k = " << w.dim() << "\n";
  return kOk;
}

int cmd_channel_preset(const ChannelSource& src, const std::string& out_path, RunManifest& m, std::ostream& out) {
  const CqChannel w = src.load(m);
  json j = channel_to_json(w);
  j["manifest"] = m.to_json();
  emit(out_path, dump(j), out);
  return kOk;
}

std::string scan_csv(const ScanResult& s, const Common& c) {
  std::ostringstream os;
  os << "index,branch," << (c.bits ? "I_bits" : "I") << ",F,Fmax";
  for (Elem d = 0; d < s.group.order(); ++d) os << ",F_" << s.group.label(d);
  os << ",H\n";
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    const auto& r = s.records[i];
    os << i << ',' << csv_quote(r.branch.to_string()) << ',' << fmt(r.I * unit(c)) << ',' << fmt(r.F) << ','
       << fmt(r.Fmax);
    for (double v : r.fd.values) os << ',' << fmt(v);
    os << ',' << csv_quote(r.best_h >= 0 ? s.subgroups[r.best_h].to_string() : "") << '\n';
  }
  return os.str();
}

int cmd_polarize(const ChannelSource& src, int n, bool stats, const Common& c, const std::string& out_path,
                 const std::string& json_path, RunManifest& m, std::ostream& out, std::ostream& err) {
  const CqChannel w = src.load(m);
  ScanOptions opt;
  opt.subgroup_stats = stats;
  const ScanResult s = polarization_scan(w, n, Caps::defaults(), opt);
  emit(out_path, scan_csv(s, c), out);
  double total = 0.0;
  for (const auto& r : s.records) total += r.I;
  const double mean = total / s.records.size();
  if (!json_path.empty()) {
    json j;
    j["n"] = n;
    j["branches"] = s.records.size();
    j["classical_path"] = s.classical_path;
    j["units"] = c.bits ? "bits" : "nats";
    j["I_W"] = s.I_W * unit(c);
    j["mean_I"] = mean * unit(c);
    j["conservation_gap"] = std::abs(mean - s.I_W) * unit(c);
    j["manifest"] = m.to_json();
    write_atomic(json_path, dump(j));
  }
  err << s.records.size() << " branches, I(W) = " << s.I_W * unit(c) << ", mean I(W^s) = " << mean * unit(c)
      << (c.bits ? " bits" : " nats") << "\n";
  return kOk;
}

int cmd_construct(const ChannelSource& src, const CodeParams& p, const std::string& out_path, RunManifest& m,
                  std::ostream& out, std::ostream& err) {
  const CqChannel w = src.load(m);
  const CodePlan plan = build_plan(w, p);
  json j = plan_to_json(plan);
  j["manifest"] = m.to_json();
  emit(out_path, dump(j), out);
  int unfrozen = 0;
  for (const auto& b : plan.branches) unfrozen += !b.frozen();
  err << "N = " << plan.N() << ", unfrozen branches = " << unfrozen << ", rate = " << plan.rate
      << " nats, bound = " << plan.bound << "\n";
  return kOk;
}

int cmd_decode_sim(const std::string& plan_path, const ExperimentOptions& opt, const std::string& out_path,
                   std::string csv_path, RunManifest& m, std::ostream& out, std::ostream& err) {
  const std::string bytes = read_file(plan_path);
  m.input_hashes[plan_path] = sha256_hex(bytes);
  json pj;
  try {
    pj = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw LoadError(plan_path + ": " + e.what());
  }
  const CodePlan plan = plan_from_json(pj);
  const CqChannel w = load_channel(plan.channel);
  const ExperimentResult r = error_experiment(w, plan, opt);
  const std::string csv = step_profile_csv(r, plan);
  json j = experiment_to_json(r, plan);
  j["step_profile_csv"] = csv;
  j["manifest"] = m.to_json();
  emit(out_path, dump(j), out);
  if (csv_path.empty() && !out_path.empty() && out_path != "-")
    csv_path = std::filesystem::path(out_path).replace_extension(".steps.csv").string();
  if (!csv_path.empty()) write_atomic(csv_path, csv);
  err << r.errors << "/" << r.trials << " block errors (" << r.path << " decoder), rate " << r.error_rate
      << " +- " << r.sigma << ", bound " << r.bound << "\n";
  return kOk;
}

int cmd_verify(const std::string& checks, int trials, std::uint64_t seed, const std::vector<int>& qs,
               const std::vector<int>& ks, const ChannelSource& src, const std::string& out_path, RunManifest& m,
               std::ostream& out, std::ostream& err) {
  std::vector<std::string> ids;
  if (checks != "all") {
    std::stringstream ss(checks);
    std::string id;
    while (std::getline(ss, id, ',')) {
      check_info(id);  // rejects unknown ids
      ids.push_back(id);
    }
  }
  std::vector<CheckReport> reports;
  if (!src.file.empty() || !src.preset.empty()) {
    const CqChannel w = src.load(m);
    reports = run_checks(ids.empty() ? check_ids() : ids, w, seed, src.file.empty() ? src.preset : src.file);
  } else {
    FuzzOptions fo;
    fo.qs = qs;
    fo.ks = ks;
    fo.ids = ids;
    reports = run_all(seed, trials, fo);
  }
  std::string body = json{{"record", "manifest"}, {"manifest", m.to_json()}}.dump() + "\n";
  for (const auto& r : reports) {
    json j = r.to_json();
    j["record"] = "check";
    body += j.dump() + "\n";
  }
  emit(out_path, body, out);
  int failures = 0;
  for (const auto& s : summarize(reports)) {
    err << s.check_id << ": " << s.instances << " instances, " << s.failures << " failures, " << s.vacuous
        << " vacuous, worst margin " << s.worst_margin << "\n";
    failures += s.failures;
  }
  if (failures > 0) throw CheckFailure(std::to_string(failures) + " check instance(s) failed");
  return kOk;
}

int cmd_mac_region(const std::vector<std::string>& users, const std::string& states, int k, int rank,
                   std::uint64_t seed, int n, const Common& c, const std::string& out_path,
                   const std::string& csv_path, RunManifest& m, std::ostream& out, std::ostream& err) {
  std::vector<FiniteAbelianGroup> groups;
  for (const auto& u : users) groups.push_back(parse_group(u));
  MacChannel w;
  if (!states.empty()) {
    ChannelSource src;
    src.file = states;
    w = MacChannel(groups, src.load(m));
  } else {
    w = random_mac(groups, k, rank, seed);
  }
  std::vector<RateRegion> rs;
  for (int d = 0; d <= n; ++d) rs.push_back(polarized_region_estimate(w, d));
  json j;
  j["users"] = users;
  j["units"] = "nats";
  j["regions"] = json::array();
  for (const auto& r : rs) j["regions"].push_back(region_to_json(r));
  j["manifest"] = m.to_json();
  emit(out_path, dump(j), out);
  if (!csv_path.empty()) write_atomic(csv_path, regions_csv(rs));
  for (const auto& r : rs)
    err << "n = " << r.n << ": sum rate " << r.sum_rate() * unit(c) << (c.bits ? " bits" : " nats") << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Polar codes for classical-quantum channels over finite Abelian groups", "cqpolar"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", kToolVersion);
  Common common;
  app.add_option("--threads", common.threads, "worker thread cap (0: OpenMP default)")->check(CLI::NonNegativeNumber);
  app.add_flag("--bits", common.bits, "report information in bits instead of nats");

  RunManifest m;

  // channel validate|preset
  auto* ch = app.add_subcommand("channel", "channel files and presets")->require_subcommand(1);
  std::string validate_path, validate_out;
  auto* chv = ch->add_subcommand("validate", "load and check a channel file");
  chv->add_option("file", validate_path, "channel JSON")->required();
  chv->add_option("--out", validate_out, "summary JSON (default stdout)");
  ChannelSource preset_src;
  std::string preset_out;
  auto* chp = ch->add_subcommand("preset", "write a preset channel as JSON");
  chp->add_option("name", preset_src.preset, "preset name")->required()->check(CLI::IsMember(preset_names()));
  chp->add_option("--q", preset_src.p.q, "alphabet size");
  chp->add_option("--k", preset_src.p.k, "output dimension");
  chp->add_option("--p", preset_src.p.p, "crossover probability");
  chp->add_option("--lambda", preset_src.p.lambda, "depolarizing weight");
  chp->add_option("--eps", preset_src.p.eps, "erasure probability");
  chp->add_option("--angles", preset_src.p.angles, "state angles in radians")->delimiter(',');
  chp->add_option("--seed", preset_src.p.seed, "seed for the random preset");
  chp->add_option("--out", preset_out, "channel JSON (default stdout)");

  // polarize
  ChannelSource pol_src;
  int pol_n = 1;
  bool pol_nostats = false;
  std::string pol_out, pol_json;
  auto* pol = app.add_subcommand("polarize", "scan every synthetic channel at depth n");
  pol_src.attach(pol);
  pol->add_option("--n", pol_n, "depth")->required()->check(CLI::Range(0, 24));
  pol->add_flag("--no-subgroup-stats", pol_nostats, "skip quotient-channel statistics");
  pol->add_option("--out", pol_out, "scan CSV (default stdout)");
  pol->add_option("--report", pol_json, "summary JSON");

  // construct
  ChannelSource con_src;
  CodeParams cp;
  std::string con_mode = "best-effort", con_sections = "random", con_out;
  auto* con = app.add_subcommand("construct", "build a code plan");
  con_src.attach(con);
  con->add_option("--n", cp.n, "depth")->required()->check(CLI::Range(0, 24));
  con->add_option("--delta", cp.delta, "closeness to log|G/H|");
  con->add_option("--beta", cp.beta, "error exponent");
  con->add_option("--beta-prime", cp.beta_prime, "threshold exponent");
  con->add_option("--mode", con_mode, "paper-strict or best-effort")
      ->check(CLI::IsMember({"paper-strict", "best-effort"}));
  con->add_option("--tau", cp.tau, "fidelity budget in best-effort mode");
  con->add_option("--sections", con_sections, "random or zero")->check(CLI::IsMember({"random", "zero"}));
  con->add_option("--seed", cp.seed, "section seed");
  con->add_option("--out", con_out, "plan JSON (default stdout)");

  // decode-sim
  std::string ds_plan, ds_out, ds_csv, ds_path = "auto";
  ExperimentOptions eo;
  auto* ds = app.add_subcommand("decode-sim", "Monte Carlo block error of a plan");
  ds->add_option("--plan", ds_plan, "plan JSON")->required();
  ds->add_option("--trials", eo.trials, "trials")->check(CLI::PositiveNumber);
  ds->add_option("--seed", eo.seed, "seed");
  ds->add_option("--decoder", ds_path, "auto, quantum or classical")
      ->check(CLI::IsMember({"auto", "quantum", "classical"}));
  ds->add_flag("--fixed-sections", eo.fixed_sections, "use the plan's sections in every trial");
  ds->add_option("--out", ds_out, "report JSON (default stdout)");
  ds->add_option("--steps-csv", ds_csv, "per-step profile CSV (default next to --out)");

  // verify
  std::string v_checks = "all", v_out;
  int v_trials = 100;
  std::uint64_t v_seed = 0;
  std::vector<int> v_qs{2, 3, 4}, v_ks{2, 3};
  ChannelSource v_src;
  auto* ver = app.add_subcommand("verify", "run the inequality checks");
  ver->add_option("--checks", v_checks, "all or a comma-separated list of check ids");
  ver->add_option("--trials", v_trials, "fuzz instances per (q, k)")->check(CLI::PositiveNumber);
  ver->add_option("--seed", v_seed, "seed");
  ver->add_option("--qs", v_qs, "alphabet sizes")->delimiter(',');
  ver->add_option("--ks", v_ks, "output dimensions")->delimiter(',');
  ver->add_option("--out", v_out, "JSONL report (default stdout)");
  v_src.attach(ver);

  // mac-region
  std::vector<std::string> mr_users{"2", "2"};
  std::string mr_states, mr_out, mr_csv;
  int mr_k = 2, mr_rank = 2, mr_n = 0;
  std::uint64_t mr_seed = 0;
  auto* mr = app.add_subcommand("mac-region", "symmetric rate region of a MAC and its polarized estimates");
  mr->add_option("--users", mr_users, "user groups, e.g. 2,2x2")->delimiter(',');
  mr->add_option("--states", mr_states, "channel JSON over the product group (default: random MAC)");
  mr->add_option("--k", mr_k, "random MAC output dimension");
  mr->add_option("--rank", mr_rank, "random MAC state rank");
  mr->add_option("--seed", mr_seed, "random MAC seed");
  mr->add_option("--n", mr_n, "largest polarization depth")->check(CLI::Range(0, 16));
  mr->add_option("--out", mr_out, "region JSON (default stdout)");
  mr->add_option("--csv", mr_csv, "region CSV");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInvalid;
  }

  if (common.threads > 0) omp_set_num_threads(common.threads);
  Stopwatch clock;
  m.clock = &clock;
  m.started_at = utc_now();

  // the innermost parsed subcommand names the run
  const CLI::App* leaf = app.get_subcommands().front();
  m.subcommand = leaf->get_name();
  while (!leaf->get_subcommands().empty()) {
    leaf = leaf->get_subcommands().front();
    m.subcommand += " " + leaf->get_name();
  }
  m.params = collect_params(leaf);
  m.params["bits"] = common.bits;
  if (leaf == ds) m.seed = eo.seed;
  if (leaf == ver) m.seed = v_seed;
  if (leaf == con) m.seed = cp.seed;
  if (leaf == mr) m.seed = mr_seed;
  if (leaf == chp) m.seed = preset_src.p.seed;
  if (leaf == pol) m.seed = pol_src.p.seed;

  try {
    if (leaf == chv) return cmd_channel_validate(validate_path, common, validate_out, m, out, err);
    if (leaf == chp) return cmd_channel_preset(preset_src, preset_out, m, out);
    if (leaf == pol) return cmd_polarize(pol_src, pol_n, !pol_nostats, common, pol_out, pol_json, m, out, err);
    if (leaf == con) {
      cp.mode = con_mode == "paper-strict" ? PlanMode::PaperStrict : PlanMode::BestEffort;
      cp.sections = con_sections == "zero" ? SectionMode::Zero : SectionMode::Random;
      cp.validate();
      return cmd_construct(con_src, cp, con_out, m, out, err);
    }
    if (leaf == ds) {
      eo.path = ds_path == "quantum" ? DecoderPath::Quantum : ds_path == "classical" ? DecoderPath::Classical
                                                                                     : DecoderPath::Auto;
      return cmd_decode_sim(ds_plan, eo, ds_out, ds_csv, m, out, err);
    }
    if (leaf == ver) return cmd_verify(v_checks, v_trials, v_seed, v_qs, v_ks, v_src, v_out, m, out, err);
    if (leaf == mr)
      return cmd_mac_region(mr_users, mr_states, mr_k, mr_rank, mr_seed, mr_n, common, mr_out, mr_csv, m, out, err);
  } catch (const CapacityError& e) {
    err << "capacity: " << e.what() << "\n";
    return kCapacity;
  } catch (const CheckFailure& e) {
    err << "check failure: " << e.what() << "\n";
    return kCheckFailed;
  } catch (const LoadError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const StructuralError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInvalid;
  }
  err << "no command given\n";
  return kInvalid;
}

}  // namespace cqpolar::cli
