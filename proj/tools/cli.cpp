// SPDX-License-Identifier: Apache-2.0

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "ica/credit.hpp"
#include "ica/error.hpp"
#include "ica/evidence.hpp"
#include "ica/planner.hpp"
#include "ica/rollout_log.hpp"
#include "ica/simulator.hpp"
#include "ica/training.hpp"

namespace ica::cli {

namespace {

using nlohmann::json;

// JSON config files: top-level keys are global flags, nested objects are
// keyed by subcommand, e.g. {"seed": 3, "train": {"steps": 50}}.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool,
                        std::string) const override {
    json j;
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        j[name] = opt->results().size() == 1 ? json(opt->results().front())
                                             : json(opt->results());
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    return flatten(j, "", {});
  }

 private:
  static std::vector<CLI::ConfigItem> flatten(
      const json& j, const std::string& name,
      const std::vector<std::string>& prefix) {
    std::vector<CLI::ConfigItem> out;
    if (j.is_object()) {
      for (auto it = j.begin(); it != j.end(); ++it) {
        auto next = prefix;
        if (!name.empty()) next.push_back(name);
        auto sub = flatten(*it, it.key(), next);
        out.insert(out.end(), sub.begin(), sub.end());
      }
      return out;
    }
    CLI::ConfigItem item;
    item.name = name;
    item.parents = prefix;
    if (j.is_boolean()) {
      item.inputs = {j.get<bool>() ? "true" : "false"};
    } else if (j.is_number()) {
      item.inputs = {j.dump()};
    } else if (j.is_string()) {
      item.inputs = {j.get<std::string>()};
    } else if (j.is_array()) {
      for (const auto& v : j) {
        item.inputs.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      }
    } else {
      throw CLI::ConversionError("config: cannot convert " + name);
    }
    out.push_back(std::move(item));
    return out;
  }
};

// Writes to `path`, or to `fallback` when path is "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path == "-" || path.empty()) {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary |
                                                      std::ios::trunc);
    if (!*file_) throw Error(ErrorCode::kIoError, "cannot write " + path);
    stream_ = file_.get();
  }
  ~Sink() {
    if (file_) file_->flush();
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const char* flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    std::stringstream conv(part);
    T value{};
    conv >> value;
    if (conv.fail() || !conv.eof()) {
      throw Error(ErrorCode::kPreconditionFailed,
                  fmt::format("{}: cannot parse '{}'", flag, part));
    }
    out.push_back(value);
  }
  return out;
}

struct CreditFlags {
  double lambda = 1.0;
  double omega = 0.95;
  double epsilon = 1e-6;
  bool normalize_raw = false;

  void attach(CLI::App* app) {
    app->add_option("--lambda", lambda, "Information-aware advantage weight")
        ->capture_default_str();
    app->add_option("--omega", omega, "Fetch-turn temporal decay in (0,1]")
        ->capture_default_str();
    app->add_option("--epsilon", epsilon, "Normalizer guard")
        ->capture_default_str();
    app->add_flag("--normalize-raw", normalize_raw,
                  "Tool statistics over raw instead of decayed credit");
  }

  CreditConfig config() const {
    CreditConfig cfg;
    cfg.lambda_weight = lambda;
    cfg.omega = omega;
    cfg.epsilon = epsilon;
    cfg.normalize_decayed = !normalize_raw;
    return cfg;
  }
};

struct UpdateFlags {
  int steps = 100;
  int group_size = 8;
  double lr = UpdateConfig{}.learning_rate;
  double clip_low = 0.8;
  double clip_high = 1.28;
  bool dynamic_sampling = false;
  int epochs = 1;

  void attach(CLI::App* app) {
    app->add_option("--steps", steps, "Training steps")->capture_default_str();
    app->add_option("--group-size", group_size, "Trajectories per query (G)")
        ->capture_default_str();
    app->add_option("--lr", lr, "Learning rate")->capture_default_str();
    app->add_option("--clip-low", clip_low, "Lower ratio clip bound")
        ->capture_default_str();
    app->add_option("--clip-high", clip_high, "Upper ratio clip bound")
        ->capture_default_str();
    app->add_flag("--dynamic-sampling", dynamic_sampling,
                  "Drop groups with uniform outcomes");
    app->add_option("--epochs", epochs, "Gradient epochs per rollout batch")
        ->capture_default_str();
  }

  UpdateConfig config(std::uint64_t seed) const {
    UpdateConfig cfg;
    cfg.steps = steps;
    cfg.group_size = group_size;
    cfg.learning_rate = lr;
    cfg.clip = ClipBounds{clip_low, clip_high};
    cfg.dynamic_sampling = dynamic_sampling;
    cfg.epochs = epochs;
    cfg.seed = seed;
    return cfg;
  }
};

WorldSpec world_or_reference(const std::string& path) {
  return path.empty() ? reference_world() : load_world(path);
}

std::string num(double v) { return fmt::format("{}", v); }

void write_metrics_csv(const std::vector<TrainStep>& series, std::ostream& out) {
  out << "step,success_rate,objective,clip_fraction,mean_abs_advantage\n";
  for (const auto& s : series) {
    out << s.step << ',' << num(s.success_rate) << ',' << num(s.objective)
        << ',' << num(s.clip_fraction) << ',' << num(s.mean_abs_advantage)
        << '\n';
  }
}

// credits

struct CreditsCmd {
  std::string in;
  std::string out = "-";
  CreditFlags credit;

  void run(std::ostream& stdout_) const {
    const CreditConfig cfg = credit.config();
    cfg.validate();
    const auto groups = parse_rollout_log(in);
    Sink sink(out, stdout_);
    for (const auto& group : groups) {
      const AcquisitionIndex index = build_index(group);
      const AdvantageTable table = compute_advantage_table(group, index, cfg);
      for (const auto& row : table.turns) {
        json rec = {
            {"record", "turn"},
            {"query_id", table.query_id},
            {"trajectory_id", row.trajectory_id},
            {"turn_index", row.turn_index},
            {"tool_kind",
             row.tool_kind ? std::string(to_string(*row.tool_kind)) : "answer"},
            {"raw_credit", row.raw_credit},
            {"decayed_credit", row.decayed_credit},
            {"normalized_advantage", row.normalized_advantage},
            {"task_advantage", row.task_advantage},
            {"mixed_advantage", row.mixed_advantage}};
        *sink << rec.dump() << '\n';
      }
      const auto tool = [](const PopulationStats& s) {
        return json{{"count", s.count}, {"mu", s.mean}, {"sigma", s.stddev}};
      };
      json summary = {
          {"record", "summary"},
          {"query_id", table.query_id},
          {"mu_R", table.mu_r},
          {"sigma_R", table.sigma_r},
          {"tools",
           {{"search", tool(table.tool_stats.search)},
            {"fetch", tool(table.tool_stats.fetch)}}},
          {"config",
           {{"omega", cfg.omega},
            {"lambda", cfg.lambda_weight},
            {"epsilon", cfg.epsilon},
            {"normalize_decayed", cfg.normalize_decayed}}}};
      *sink << summary.dump() << '\n';
    }
  }
};

// simulate

struct SimulateCmd {
  std::string world;
  std::string policy = "random";
  int group_size = 8;
  int groups = 1;
  std::string out;

  void run(std::uint64_t seed) const {
    const WorldSpec w = load_world(world);
    std::unique_ptr<Policy> pol;
    if (policy == "random") {
      pol = std::make_unique<SoftmaxPolicy>();
    } else if (policy.starts_with("scripted:")) {
      pol = std::make_unique<ScriptedPolicy>(
          ScriptedPolicy::from_json(read_file(policy.substr(9))));
    } else if (policy.starts_with("trained:")) {
      pol = std::make_unique<SoftmaxPolicy>(
          SoftmaxPolicy::from_json(read_file(policy.substr(8))));
    } else {
      throw CLI::ValidationError("--policy",
                                 "expected random, scripted:<file> or "
                                 "trained:<file>");
    }
    std::vector<RolloutGroup> result;
    for (int g = 0; g < groups; ++g) {
      for (std::size_t qi = 0; qi < w.queries.size(); ++qi) {
        const std::uint64_t group_seed = derive_seed(
            seed, {static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(qi)});
        result.push_back(rollout_group(w, w.queries[qi].query_id, *pol,
                                       group_size, group_seed));
      }
    }
    write_rollout_log(result, out);
  }
};

// train

struct TrainCmd {
  std::string algo = "ica";
  std::string world;
  std::string metrics_out = "-";
  std::string policy_out;
  UpdateFlags update;
  CreditFlags credit;

  void run(std::uint64_t seed, std::ostream& stdout_) const {
    const auto a = parse_algo(algo);
    const WorldSpec w = world_or_reference(world);
    const TrainResult result =
        train(w, *a, update.config(seed), credit.config());
    Sink sink(metrics_out, stdout_);
    write_metrics_csv(result.series, *sink);
    if (!policy_out.empty()) {
      std::ofstream out(policy_out, std::ios::binary | std::ios::trunc);
      if (!out) throw Error(ErrorCode::kIoError, "cannot write " + policy_out);
      out << result.policy.to_json() << '\n';
    }
  }
};

// compare

struct CompareCmd {
  std::string world;
  int seeds = 5;
  std::string out = "-";
  std::string metrics_dir;
  UpdateFlags update;
  CreditFlags credit;

  void run(std::uint64_t base_seed, std::ostream& stdout_) const {
    if (seeds < 1) throw CLI::ValidationError("--seeds", "must be >= 1");
    const WorldSpec w = world_or_reference(world);
    if (!metrics_dir.empty()) std::filesystem::create_directories(metrics_dir);
    Sink sink(out, stdout_);
    *sink << "seed,algo,final_success_rate,steps_to_half_max,"
             "mean_clip_fraction\n";
    for (int k = 0; k < seeds; ++k) {
      const std::uint64_t seed = base_seed + static_cast<std::uint64_t>(k);
      for (Algo a : {Algo::kGrpo, Algo::kIca}) {
        const TrainResult r = train(w, a, update.config(seed), credit.config());
        const double final_rate = final_success_rate(r.series);
        if (!metrics_dir.empty()) {
          const auto path = std::filesystem::path(metrics_dir) /
                            fmt::format("{}_seed{}.csv", to_string(a), seed);
          std::ofstream csv(path, std::ios::binary | std::ios::trunc);
          if (!csv) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
          write_metrics_csv(r.series, csv);
        }
        *sink << seed << ',' << to_string(a) << ',' << num(final_rate) << ','
              << steps_to_half_max(r.series, final_rate) << ','
              << num(mean_clip_fraction(r.series)) << '\n';
      }
    }
  }
};

// inspect-evidence

struct InspectCmd {
  std::string in;
  std::string out = "-";
  std::string query;

  void run(std::ostream& stdout_) const {
    const auto groups = parse_rollout_log(in);
    Sink sink(out, stdout_);
    *sink << "evidence_id,kind,canonical_url,n_trajectories,n_success,"
             "n_failure\n";
    for (const auto& group : groups) {
      if (!query.empty() && group.query_id != query) continue;
      const AcquisitionIndex index = build_index(group);
      for (const auto& s : summarize_evidence(group, index)) {
        *sink << s.unit.evidence_id << ',' << to_string(s.unit.kind) << ','
              << s.unit.canonical_url << ',' << s.n_trajectories << ','
              << s.n_success << ',' << s.n_failure << '\n';
      }
    }
  }
};

// plan-slices / plan-chunks

struct PlanSlicesCmd {
  std::int64_t height = 0;
  SliceGeometry geometry;

  void run(std::ostream& out) const {
    const SlicePlan plan = slice_plan(height, geometry);
    out << "effective_height," << plan.effective_height << '\n'
        << "truncated," << (plan.truncated ? "true" : "false") << '\n'
        << "scale," << num(plan.scale_factor) << '\n'
        << "slice,y_start,y_end,height,scaled_height\n";
    for (std::size_t i = 0; i < plan.slices.size(); ++i) {
      const Slice& s = plan.slices[i];
      out << i + 1 << ',' << s.y_start << ',' << s.y_end << ',' << s.height()
          << ',' << scaled_height(s, plan.scale_factor) << '\n';
    }
  }
};

struct PlanChunksCmd {
  std::string lengths;
  std::string scores;
  std::size_t k = kTopK;
  std::int64_t budget = kContextBudget;
  std::int64_t base = kBaseChunkTokens;

  void run(std::ostream& out) const {
    const auto lens = parse_list<std::int64_t>(lengths, "--lengths");
    ChunkPlan plan = chunk_merge(lens, base);
    std::vector<double> sc = scores.empty()
                                 ? std::vector<double>(plan.chunks.size(), 0.0)
                                 : parse_list<double>(scores, "--scores");
    plan = select_and_truncate(std::move(plan), sc, k, budget);
    out << "chunk,members,total_tokens\n";
    for (std::size_t i = 0; i < plan.chunks.size(); ++i) {
      std::string members;
      for (std::size_t m : plan.chunks[i].members) {
        if (!members.empty()) members += ' ';
        members += std::to_string(m);
      }
      out << i << ',' << members << ',' << plan.chunks[i].total_tokens << '\n';
    }
    out << "rank,chunk,kept_tokens\n";
    for (std::size_t r = 0; r < plan.selected.size(); ++r) {
      out << r + 1 << ',' << plan.selected[r] << ',' << plan.selected_tokens[r]
          << '\n';
    }
    out << "final_token_count," << plan.final_token_count << '\n';
  }
};

struct MakeWorldCmd {
  WorldParams params;
  std::string out;

  void run(std::uint64_t seed) {
    params.seed = seed;
    save_world(generate_world(params), out);
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Information-aware credit assignment toolkit", "ica"};
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config file; flags override its values");
  app.allow_config_extras(false);
  app.require_subcommand(1);
  app.fallthrough();

  std::uint64_t seed = 1;
  app.add_option("--seed", seed, "Seed for every stochastic stage")
      ->capture_default_str();

  CreditsCmd credits;
  auto* c = app.add_subcommand("credits", "Dense turn-level advantages for a rollout log");
  c->add_option("--in", credits.in, "Rollout log (JSONL)")->required()->check(CLI::ExistingFile);
  c->add_option("--out", credits.out, "Output JSONL, - for stdout")->capture_default_str();
  credits.credit.attach(c);

  SimulateCmd simulate;
  auto* s = app.add_subcommand("simulate", "Roll out groups in a synthetic web world");
  s->add_option("--world", simulate.world, "World file")->required()->check(CLI::ExistingFile);
  s->add_option("--policy", simulate.policy, "random | scripted:<file> | trained:<file>")
      ->capture_default_str();
  s->add_option("--group-size", simulate.group_size, "Trajectories per group (G)")
      ->capture_default_str();
  s->add_option("--groups", simulate.groups, "Groups per query")->capture_default_str();
  s->add_option("--out", simulate.out, "Output rollout log")->required();

  TrainCmd train_cmd;
  auto* t = app.add_subcommand("train", "Train a tabular policy with GRPO or ICA-GRPO");
  t->add_option("--algo", train_cmd.algo, "grpo | ica")
      ->check(CLI::IsMember({"grpo", "ica"}))
      ->capture_default_str();
  t->add_option("--world", train_cmd.world, "World file (default: reference world)")
      ->check(CLI::ExistingFile);
  t->add_option("--metrics-out", train_cmd.metrics_out, "Metrics CSV, - for stdout")
      ->capture_default_str();
  t->add_option("--policy-out", train_cmd.policy_out, "Write the trained policy (JSON)");
  train_cmd.update.attach(t);
  train_cmd.credit.attach(t);

  CompareCmd compare;
  auto* cmp = app.add_subcommand("compare", "Paired-seed GRPO vs ICA comparison");
  cmp->add_option("--world", compare.world, "World file (default: reference world)")
      ->check(CLI::ExistingFile);
  cmp->add_option("--seeds", compare.seeds, "Number of paired seeds")->capture_default_str();
  cmp->add_option("--out", compare.out, "Summary CSV, - for stdout")->capture_default_str();
  cmp->add_option("--metrics-dir", compare.metrics_dir, "Directory for per-arm metrics CSVs");
  compare.update.attach(cmp);
  compare.credit.attach(cmp);

  InspectCmd inspect;
  auto* ie = app.add_subcommand("inspect-evidence", "Per-unit acquisition counts");
  ie->add_option("--in", inspect.in, "Rollout log (JSONL)")->required()->check(CLI::ExistingFile);
  ie->add_option("--out", inspect.out, "Output CSV, - for stdout")->capture_default_str();
  ie->add_option("--query", inspect.query, "Restrict to one query_id");

  PlanSlicesCmd slices;
  auto* ps = app.add_subcommand("plan-slices", "Snapshot slicing geometry");
  ps->add_option("--height", slices.height, "Rendered page height (px)")->required();
  ps->add_option("--slice-height", slices.geometry.slice_height, "Slice height (px)")
      ->capture_default_str();
  ps->add_option("--overlap", slices.geometry.overlap, "Vertical overlap (px)")
      ->capture_default_str();
  ps->add_option("--cap", slices.geometry.cap, "Maximum rendered height (px)")
      ->capture_default_str();
  ps->add_option("--scale", slices.geometry.scale, "Per-slice downsample factor")
      ->capture_default_str();

  PlanChunksCmd chunks;
  auto* pc = app.add_subcommand("plan-chunks", "Chunk merge, top-K selection and budget");
  pc->add_option("--lengths", chunks.lengths, "Segment token lengths, comma separated")
      ->required();
  pc->add_option("--scores", chunks.scores, "Per-chunk relevance scores, comma separated");
  pc->add_option("--k", chunks.k, "Chunks retained")->capture_default_str();
  pc->add_option("--budget", chunks.budget, "Context budget (tokens)")->capture_default_str();
  pc->add_option("--base", chunks.base, "Base chunk size (tokens)")->capture_default_str();

  MakeWorldCmd make_world;
  auto* mw = app.add_subcommand("make-world", "Generate a seeded world file");
  mw->add_option("--pages", make_world.params.n_pages, "Pages")->capture_default_str();
  mw->add_option("--gold", make_world.params.n_gold_per_query, "Gold pages per query")
      ->capture_default_str();
  mw->add_option("--queries", make_world.params.n_queries, "Queries")->capture_default_str();
  mw->add_option("--distractor-ratio", make_world.params.distractor_ratio,
                 "Distractors per gold page")
      ->capture_default_str();
  mw->add_option("--results-per-search", make_world.params.results_per_search,
                 "Items per search response")
      ->capture_default_str();
  mw->add_option("--max-turns", make_world.params.max_turns, "Turn cap")
      ->capture_default_str();
  mw->add_option("--out", make_world.out, "Output world file")->required();

  std::vector<const char*> argv{"ica"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (c->parsed()) credits.run(out);
    else if (s->parsed()) simulate.run(seed);
    else if (t->parsed()) train_cmd.run(seed, out);
    else if (cmp->parsed()) compare.run(seed, out);
    else if (ie->parsed()) inspect.run(out);
    else if (ps->parsed()) slices.run(out);
    else if (pc->parsed()) chunks.run(out);
    else if (mw->parsed()) make_world.run(seed);
  } catch (const CLI::ParseError& e) {
    err << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace ica::cli
