#pragma once

// Command-line surface. run_cli() is the whole program minus process setup so
// tests can drive it in-process.
//
// Exit codes: 0 success, 1 domain error (bad data, failed precondition),
// 2 usage error (unknown subcommand or flag, missing argument).

#include <cstdlib>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sgtrkit/assembler.hpp"
#include "sgtrkit/decoder.hpp"
#include "sgtrkit/io.hpp"
#include "sgtrkit/losses.hpp"
#include "sgtrkit/matcher.hpp"
#include "sgtrkit/metrics.hpp"
#include "sgtrkit/synthetic.hpp"

namespace sgtrkit::cli {

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

// Reads SGTRKIT_LOG; unset or unrecognized means "error".
inline LogLevel log_level_from_env() {
  const char* v = std::getenv("SGTRKIT_LOG");
  if (v == nullptr) return LogLevel::kError;
  const std::string s(v);
  if (s == "debug") return LogLevel::kDebug;
  if (s == "info") return LogLevel::kInfo;
  return LogLevel::kError;
}

class Logger {
 public:
  Logger(std::ostream& err, LogLevel level) : err_(err), level_(level) {}

  void error(const std::string& msg) const { err_ << "sgtrkit: error: " << msg << "\n"; }
  void info(const std::string& msg) const {
    if (level_ >= LogLevel::kInfo) err_ << "sgtrkit: info: " << msg << "\n";
  }
  void debug(const std::string& msg) const {
    if (level_ >= LogLevel::kDebug) err_ << "sgtrkit: debug: " << msg << "\n";
  }

 private:
  std::ostream& err_;
  LogLevel level_;
};

namespace detail {

inline void emit(const std::string& text, const std::string& out_path, std::ostream& out, const Logger& log) {
  if (out_path.empty()) {
    out << text;
  } else {
    io::write_text_file(out_path, text);
    log.info("wrote " + out_path);
  }
}

inline std::vector<std::size_t> parse_ks(const std::string& s) {
  std::vector<std::size_t> ks;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != tok.size()) throw ConfigError("--ks: \"" + tok + "\" is not a cutoff");
    ks.push_back(v);
  }
  return ks;
}

inline const PredicateNodeSet& require_predicates(const SceneFixture& s, const std::string& path) {
  if (!s.predicates) throw InvariantError(path + ": scene has no predicate nodes; run `decode` first");
  return *s.predicates;
}

inline void require_same_image(const std::string& a, const std::string& b, const std::string& what) {
  if (a != b) throw InvariantError(what + ": image_id \"" + b + "\" does not match scene \"" + a + "\"");
}

}  // namespace detail

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const Logger log(err, log_level_from_env());

  CLI::App app{"sgtrkit: scene-graph assembling, matching, losses and evaluation", "sgtrkit"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, out_path;
  app.add_option("--config", config_path, "run configuration (config.json)")->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "write output here instead of standard output");

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic", "write a seeded synthetic scene with a planted answer");
  std::uint64_t seed = 0;
  double noise = 0.0;
  std::size_t n_entities = 4, n_relations = 3;
  std::string weights_out;
  gen->add_option("--seed", seed, "generator seed");
  gen->add_option("--noise", noise, "std-dev of the indicator perturbation");
  gen->add_option("--entities", n_entities, "number of entities");
  gen->add_option("--relations", n_relations, "number of GT relations");
  gen->add_option("--weights-out", weights_out, "also write random toy decoder weights here");

  // decode
  auto* dec = app.add_subcommand("decode", "run the predicate decoder: weights + scene features -> predicate nodes");
  std::string weights_path, scene_path;
  dec->add_option("weights", weights_path, "weights.json")->required()->check(CLI::ExistingFile);
  dec->add_option("scene", scene_path, "scene.json with entities and z_p")->required()->check(CLI::ExistingFile);

  // assemble
  auto* asmb = app.add_subcommand("assemble", "link predicate nodes to entities and rank triplets");
  std::optional<std::size_t> top_k, n_out;
  bool raw = false;
  asmb->add_option("scene", scene_path, "scene.json with predicate nodes")->required()->check(CLI::ExistingFile);
  asmb->add_option("--top-k", top_k, "links kept per predicate and role");
  asmb->add_option("--n-out", n_out, "triplets kept after ranking");
  asmb->add_flag("--raw", raw, "emit all K*N_r candidates without filtering or ranking");

  // match
  auto* mat = app.add_subcommand("match", "Hungarian matching of triplets to GT relations");
  std::string triplets_path;
  mat->add_option("scene", scene_path, "scene.json with GT")->required()->check(CLI::ExistingFile);
  mat->add_option("triplets", triplets_path, "triplets.json")->required()->check(CLI::ExistingFile);

  // loss
  auto* los = app.add_subcommand("loss", "predicate generator loss for a match");
  std::string match_path;
  los->add_option("scene", scene_path, "scene.json with predicate nodes and GT")->required()->check(CLI::ExistingFile);
  los->add_option("triplets", triplets_path, "triplets.json the match refers to")->required()->check(CLI::ExistingFile);
  los->add_option("match", match_path, "match.json")->required()->check(CLI::ExistingFile);

  // eval
  auto* ev = app.add_subcommand("eval", "Recall@K, mean Recall@K, group and zero-shot recall");
  std::vector<std::string> eval_files;
  std::string ks_arg, format = "json";
  std::optional<double> iou_arg;
  ev->add_option("files", eval_files, "scene.json triplets.json pairs, one pair per image")
      ->required()
      ->check(CLI::ExistingFile);
  ev->add_option("--ks", ks_arg, "comma-separated cutoffs, e.g. 20,50,100");
  ev->add_option("--iou", iou_arg, "IoU threshold for box matches");
  ev->add_option("--format", format, "json or table")->check(CLI::IsMember({"json", "table"}));

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "sgtrkit: usage error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  if (ev->parsed() && eval_files.size() % 2 != 0) {
    err << "sgtrkit: usage error: eval expects scene.json triplets.json pairs\n\n" << ev->help();
    return 2;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = io::load_config(config_path);
    log.debug("config: " + io::to_json(cfg).dump());

    if (gen->parsed()) {
      SyntheticOptions opt;
      opt.seed = seed;
      opt.noise = noise;
      opt.n_entities = n_entities;
      opt.n_relations = n_relations;
      opt.num_entity_classes = cfg.model.num_entity_classes;
      opt.num_predicate_classes = cfg.model.num_predicate_classes;
      opt.feature_dim = cfg.model.d;
      const SceneFixture scene = gen_synthetic(opt);
      if (!weights_out.empty()) {
        ModelDims dims = cfg.model;
        io::write_text_file(weights_out, io::canonical_dump(io::to_json(random_decoder_weights(dims, seed))));
        log.info("wrote " + weights_out);
      }
      detail::emit(io::canonical_dump(io::to_json(scene)), out_path, out, log);
      return 0;
    }

    if (dec->parsed()) {
      const DecoderWeights w = io::load_weights(weights_path);
      SceneFixture scene = io::load_scene(scene_path);
      if (!scene.z_p) throw InvariantError(scene_path + ": scene has no z_p feature fixture");
      if (w.w_cls_pred.cols() != scene.num_predicate_classes + 1 || w.w_cls_ent.cols() != scene.num_entity_classes + 1) {
        throw ShapeError("decode: weight class heads do not match the scene's class counts");
      }
      scene.predicates = decode(w, scene.entities, *scene.z_p);
      log.info("decoded " + std::to_string(scene.predicates->size()) + " predicate nodes through " +
               std::to_string(w.layers.size()) + " layers");
      detail::emit(io::canonical_dump(io::to_json(scene)), out_path, out, log);
      return 0;
    }

    if (asmb->parsed()) {
      const SceneFixture scene = io::load_scene(scene_path);
      const auto& preds = detail::require_predicates(scene, scene_path);
      AssembleOptions opt{top_k.value_or(cfg.k_assemble), cfg.eps};
      auto triplets = assemble(preds, scene.entities, opt);
      log.info("assembled " + std::to_string(triplets.size()) + " candidate triplets at K = " + std::to_string(opt.top_k));
      if (!raw) {
        const std::size_t keep = n_out.value_or(cfg.n_out);
        if (keep == 0) throw ArgumentError("--n-out must be positive");
        triplets = postprocess(triplets, keep);
        log.info(std::to_string(triplets.size()) + " triplets after filtering and ranking");
      }
      detail::emit(io::canonical_dump(io::to_json(io::TripletFile{scene.image_id(), triplets})), out_path, out, log);
      return 0;
    }

    if (mat->parsed()) {
      const SceneFixture scene = io::load_scene(scene_path);
      const io::TripletFile tf = io::load_triplets(triplets_path);
      detail::require_same_image(scene.image_id(), tf.image_id, triplets_path);
      const CostMatrix cost = build_cost(tf.triplets, scene.gt, cfg.cost);
      io::MatchFile mf;
      mf.image_id = scene.image_id();
      mf.match = hungarian(cost);
      for (std::size_t j = 0; j < scene.gt.size(); ++j) {
        const std::size_t t = mf.match.gt_to_pred[j];
        mf.pairs.push_back({j, t, tf.triplets[t].pred_index, cost.values(t, j),
                            predicate_cost(tf.triplets[t], scene.gt[j]), entity_cost(tf.triplets[t], scene.gt[j], cfg.cost)});
      }
      log.info("matched " + std::to_string(scene.gt.size()) + " GT relations, total cost " +
               std::to_string(mf.match.total_cost));
      detail::emit(io::canonical_dump(io::to_json(mf)), out_path, out, log);
      return 0;
    }

    if (los->parsed()) {
      const SceneFixture scene = io::load_scene(scene_path);
      const auto& preds = detail::require_predicates(scene, scene_path);
      const io::TripletFile tf = io::load_triplets(triplets_path);
      const io::MatchFile mf = io::load_match(match_path);
      detail::require_same_image(scene.image_id(), tf.image_id, triplets_path);
      detail::require_same_image(scene.image_id(), mf.image_id, match_path);
      const MatchAssignment m = to_predicate_match(mf.match, tf.triplets);
      const LossReport r = total_pre_loss(preds, scene.gt, m, cfg.loss_normalization);
      detail::emit(io::canonical_dump(io::loss_to_json(r, scene.image_id(), cfg.loss_normalization)), out_path, out,
                   log);
      return 0;
    }

    if (ev->parsed()) {
      EvalConfig ecfg = cfg.eval;
      if (!ks_arg.empty()) ecfg.ks = detail::parse_ks(ks_arg);
      if (iou_arg) ecfg.iou_threshold = *iou_arg;
      ecfg.validate();
      std::vector<ImageResult> images;
      for (std::size_t i = 0; i < eval_files.size(); i += 2) {
        const SceneFixture scene = io::load_scene(eval_files[i]);
        io::TripletFile tf = io::load_triplets(eval_files[i + 1]);
        detail::require_same_image(scene.image_id(), tf.image_id, eval_files[i + 1]);
        images.push_back({std::move(tf.triplets), scene.gt});
      }
      const EvalReport report = evaluate(images, ecfg);
      const std::string text =
          format == "table" ? format_report_table(report) : io::canonical_dump(io::to_json(report, images.size()));
      detail::emit(text, out_path, out, log);
      return 0;
    }
  } catch (const Error& e) {
    log.error(e.what());
    return 1;
  } catch (const std::exception& e) {
    log.error(std::string("unexpected failure: ") + e.what());
    return 1;
  }
  return 2;
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run_cli(args, out, err);
}

}  // namespace sgtrkit::cli
