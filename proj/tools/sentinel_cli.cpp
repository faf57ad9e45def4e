// Command-line entry point: service, corpus pipeline, evaluation and survey
// reporting. Exit status: 0 success, 1 data error, 2 usage error.

#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "sentinel/sentinel.hpp"

namespace {

using namespace sentinel;

constexpr int kDataError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error(errc::io_failure, "cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw error(errc::io_failure, "cannot write '" + path + "'");
  out << content;
  if (!out) throw error(errc::io_failure, "write to '" + path + "' failed");
}

// A conversation file holds one JSON object, a JSON array, or one record per line.
std::vector<Conversation> read_conversations(const std::string& path) {
  const auto text = read_file(path);
  const json doc = json::parse(text, nullptr, false);
  if (!doc.is_discarded()) {
    std::vector<Conversation> out;
    if (doc.is_object()) {
      out.push_back(conversation_from_json(doc));
    } else if (doc.is_array()) {
      for (const auto& c : doc) out.push_back(conversation_from_json(c));
    } else {
      throw error(errc::malformed_record, "'" + path + "' holds no conversation");
    }
    for (const auto& c : out) {
      if (const auto v = validate_conversation(c); !v) {
        throw error(errc::malformed_record, c.id + ": " + v.describe());
      }
    }
    return out;
  }
  std::istringstream in(text);
  return parse_corpus(in);
}

BackendConfig backend_from_name(const std::string& name, const std::optional<std::string>& endpoint,
                                std::uint64_t rng_seed, int timeout_ms) {
  const auto kind = parse_backend_kind(name);
  if (!kind) throw error(errc::unknown_backend, "'" + name + "'");
  BackendConfig cfg;
  cfg.kind = *kind;
  cfg.endpoint = endpoint;
  cfg.rng_seed = rng_seed;
  cfg.timeout = std::chrono::milliseconds(timeout_ms);
  return cfg;
}

struct ServeOptions {
  std::optional<std::string> config;
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<std::string> corpus;
  std::optional<std::string> state_dir;
  std::optional<std::string> backend;
  std::optional<std::string> endpoint;
  std::optional<std::size_t> k;
};

int run_serve(const ServeOptions& opt) {
  ServiceConfig config;
  std::optional<std::string> config_path = opt.config;
  if (!config_path) {
    if (const char* env = std::getenv("SENTINEL_CONFIG"); env != nullptr && *env != '\0') {
      config_path = env;
    }
  }
  if (config_path) config = load_service_config(*config_path);
  if (opt.host) config.host = *opt.host;
  if (opt.port) config.port = *opt.port;
  if (opt.corpus) config.corpus_path = *opt.corpus;
  if (opt.state_dir) config.state_dir = *opt.state_dir;
  if (opt.backend) {
    const auto kind = parse_backend_kind(*opt.backend);
    if (!kind) throw error(errc::unknown_backend, "'" + *opt.backend + "'");
    config.sessions.backend.kind = *kind;
  }
  if (opt.endpoint) config.sessions.backend.endpoint = *opt.endpoint;
  if (opt.k) config.sessions.k = *opt.k;

  // SIGINT/SIGTERM stop the server; worker threads inherit the blocked mask.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  SentinelService service(config);
  if (!service.bind()) {
    throw error(errc::io_failure, fmt::format("cannot listen on {}:{}", config.host, config.port));
  }
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&stop_signals, &sig);
    service.wait_until_ready();
    service.stop();
  });
  std::cerr << fmt::format("listening on {}:{}\n", config.host, config.port);
  service.listen_after_bind();
  watcher.join();
  std::cerr << "stopped\n";
  return 0;
}

struct GenerateOptions {
  std::string seeds;
  std::string lexicons;
  std::size_t total = 902;
  std::uint64_t seed = 7;
  std::string out;
};

int run_generate(const GenerateOptions& opt) {
  const auto seeds = load_seeds(opt.seeds);
  const auto lexicons = load_lexicon(opt.lexicons);
  const auto forged = forge_corpus(seeds, lexicons, opt.total, opt.seed);
  save_corpus(forged.conversations, opt.out);
  std::cout << fmt::format("wrote {} conversations from {} seeds to {}\n",
                           forged.conversations.size(), seeds.size(), opt.out);
  if (forged.diversity_warning) {
    std::cerr << "warning: some variants repeat (a seed lacks placeholders or enough lexicon entries)\n";
  }
  return 0;
}

struct SplitOptions {
  std::string corpus;
  std::size_t train = 812;
  std::size_t val = 90;
  std::uint64_t seed = 2024;
  std::optional<std::string> train_out;
  std::optional<std::string> val_out;
};

int run_split(const SplitOptions& opt) {
  const auto corpus = load_corpus(opt.corpus);
  const auto split = split_corpus(corpus, opt.train, opt.val, opt.seed);
  if (opt.train_out) save_corpus(select_conversations(corpus, split.train), *opt.train_out);
  if (opt.val_out) save_corpus(select_conversations(corpus, split.validation), *opt.val_out);
  std::cout << fmt::format("train {} / validation {} (seed {})\n", split.train.size(),
                           split.validation.size(), opt.seed);
  return 0;
}

struct EvaluateOptions {
  std::optional<std::string> corpus;
  std::optional<std::string> train_corpus;
  std::optional<std::string> validation;
  std::size_t train = 812;
  std::size_t val = 90;
  std::uint64_t split_seed = 2024;
  std::string backend_a = "retrieval";
  std::string backend_b = "baseline";
  std::optional<std::string> endpoint;
  std::uint64_t rng_seed = 42;
  int timeout_ms = 5000;
  std::size_t k = kDefaultWindow;
  std::optional<std::string> json_out;
  std::optional<std::string> table_out;
};

int run_evaluate(const EvaluateOptions& opt) {
  std::vector<Conversation> train;
  std::vector<Conversation> validation;
  if (opt.corpus) {
    if (opt.train_corpus || opt.validation) {
      throw UsageError("--corpus excludes --train-corpus/--validation");
    }
    const auto corpus = load_corpus(*opt.corpus);
    const auto split = split_corpus(corpus, opt.train, opt.val, opt.split_seed);
    train = select_conversations(corpus, split.train);
    validation = select_conversations(corpus, split.validation);
  } else if (opt.train_corpus && opt.validation) {
    train = load_corpus(*opt.train_corpus);
    validation = load_corpus(*opt.validation);
  } else {
    throw UsageError("give --corpus, or both --train-corpus and --validation");
  }
  const auto resources = resources_from_corpus(train, opt.k);
  auto a = make_backend(backend_from_name(opt.backend_a, opt.endpoint, opt.rng_seed, opt.timeout_ms), resources);
  auto b = make_backend(backend_from_name(opt.backend_b, opt.endpoint, opt.rng_seed, opt.timeout_ms), resources);
  const auto report = compare_backends(*a, *b, validation, opt.k);
  const auto table = render_comparison_table(report);
  std::cout << table;
  if (opt.table_out) write_file(*opt.table_out, table);
  if (opt.json_out) write_file(*opt.json_out, to_json(report).dump(2) + "\n");
  return 0;
}

struct ScoreOptions {
  std::string conversation;
  std::string corpus;
  std::string backend = "retrieval";
  std::optional<std::string> endpoint;
  std::uint64_t rng_seed = 42;
  int timeout_ms = 5000;
  std::size_t k = kDefaultWindow;
  double watch = AlertThresholds{}.watch;
  double likely = AlertThresholds{}.likely;
  bool as_json = false;
};

int run_score(const ScoreOptions& opt) {
  const auto conversations = read_conversations(opt.conversation);
  if (conversations.size() != 1) {
    throw error(errc::malformed_record,
                fmt::format("expected one conversation, found {}", conversations.size()));
  }
  const auto& conv = conversations.front();
  const AlertThresholds thresholds{opt.watch, opt.likely};
  thresholds.validate();
  const auto resources = resources_from_corpus(load_corpus(opt.corpus), opt.k);
  auto backend = make_backend(backend_from_name(opt.backend, opt.endpoint, opt.rng_seed, opt.timeout_ms), resources);
  const auto eval = evaluate_conversation(*backend, conv, opt.k);
  const AlertLevel alert = eval.summary ? alert_state(*eval.summary, thresholds) : AlertLevel::None;

  if (opt.as_json) {
    json scores = json::array();
    for (const auto& s : eval.scores) scores.push_back({{"turn_index", s.turn_index}, {"similarity", s.similarity}});
    std::cout << json{{"id", conv.id},
                      {"backend_id", backend->id()},
                      {"scores", scores},
                      {"summary", eval.summary ? to_json(*eval.summary) : json(nullptr)},
                      {"alert", to_string(alert)},
                      {"thresholds", to_json(thresholds)}}
                     .dump(2)
              << '\n';
    return 0;
  }
  std::cout << fmt::format("conversation {} scored with {}\n", conv.id, backend->id());
  std::cout << fmt::format("{:>6}  {:>10}  {}\n", "turn", "similarity", "message");
  for (const auto& s : eval.scores) {
    std::cout << fmt::format("{:>6}  {:>10.4f}  {}\n", s.turn_index, s.similarity, conv.turns[s.turn_index].text);
  }
  if (eval.summary) {
    std::cout << fmt::format("mean {:.4f}  max {:.4f}  over {} turns\n", eval.summary->mean,
                             eval.summary->max, eval.summary->n_scored);
  } else {
    std::cout << "no scorable scammer turns\n";
  }
  std::cout << fmt::format("alert {} (watch {:.2f}, likely {:.2f})\n", to_string(alert), thresholds.watch,
                           thresholds.likely);
  return 0;
}

struct SurveyOptions {
  std::string responses;
  bool as_json = false;
  std::string control_name = "Control";
  std::string treatment_name = "Treatment";
};

int run_survey(const SurveyOptions& opt) {
  std::ifstream in(opt.responses);
  if (!in) throw error(errc::io_failure, "cannot open '" + opt.responses + "'");
  std::vector<SurveyResponse> responses;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (detail::is_blank(line)) continue;
    try {
      responses.push_back(survey_response_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw record_error(errc::malformed_record, line_no, e.what());
    } catch (const error& e) {
      throw record_error(e.code(), line_no, e.what());
    }
  }
  const auto report = aggregate_survey(responses);
  if (opt.as_json) {
    std::cout << to_json(report).dump(2) << '\n';
  } else {
    std::cout << render_survey_table(report, {opt.control_name, opt.treatment_name});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scam-mimicry sentinel: live similarity scoring, corpus tools and evaluation"};
  app.require_subcommand(1);

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Start the HTTP service");
  serve_cmd->add_option("--config", serve.config, "Service configuration file (default: $SENTINEL_CONFIG)");
  serve_cmd->add_option("--host", serve.host, "Listen address");
  serve_cmd->add_option("--port", serve.port, "Listen port");
  serve_cmd->add_option("--corpus", serve.corpus, "Corpus file for the reply index");
  serve_cmd->add_option("--state-dir", serve.state_dir, "Directory for session journals");
  serve_cmd->add_option("--backend", serve.backend, "Default backend: retrieval, baseline or remote");
  serve_cmd->add_option("--endpoint", serve.endpoint, "Remote completion endpoint URL");
  serve_cmd->add_option("--k", serve.k, "Context window size");

  auto* corpus_cmd = app.add_subcommand("corpus", "Corpus generation and splitting");
  corpus_cmd->require_subcommand(1);
  GenerateOptions gen;
  auto* gen_cmd = corpus_cmd->add_subcommand("generate", "Expand seed templates into a corpus");
  gen_cmd->add_option("--seeds", gen.seeds, "Seed template file")->required();
  gen_cmd->add_option("--lexicons", gen.lexicons, "Lexicon file")->required();
  gen_cmd->add_option("--total", gen.total, "Number of conversations")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output corpus file")->required();

  SplitOptions split;
  auto* split_cmd = corpus_cmd->add_subcommand("split", "Seeded train/validation split");
  split_cmd->add_option("--corpus", split.corpus, "Corpus file")->required();
  split_cmd->add_option("--train", split.train, "Training conversations")->capture_default_str();
  split_cmd->add_option("--val", split.val, "Validation conversations")->capture_default_str();
  split_cmd->add_option("--seed", split.seed, "RNG seed")->capture_default_str();
  split_cmd->add_option("--train-out", split.train_out, "Write the training corpus here");
  split_cmd->add_option("--val-out", split.val_out, "Write the validation corpus here");

  EvaluateOptions eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Compare two backends on validation conversations");
  eval_cmd->add_option("--corpus", eval.corpus, "Corpus to split into train/validation");
  eval_cmd->add_option("--train-corpus", eval.train_corpus, "Pre-split training corpus");
  eval_cmd->add_option("--validation", eval.validation, "Pre-split validation corpus");
  eval_cmd->add_option("--train", eval.train, "Training conversations")->capture_default_str();
  eval_cmd->add_option("--val", eval.val, "Validation conversations")->capture_default_str();
  eval_cmd->add_option("--split-seed", eval.split_seed, "Split RNG seed")->capture_default_str();
  eval_cmd->add_option("--backend-a", eval.backend_a, "First backend")->capture_default_str();
  eval_cmd->add_option("--backend-b", eval.backend_b, "Second backend")->capture_default_str();
  eval_cmd->add_option("--endpoint", eval.endpoint, "Remote completion endpoint URL");
  eval_cmd->add_option("--rng-seed", eval.rng_seed, "Baseline RNG seed")->capture_default_str();
  eval_cmd->add_option("--timeout-ms", eval.timeout_ms, "Remote timeout")->capture_default_str();
  eval_cmd->add_option("--k", eval.k, "Context window size")->capture_default_str();
  eval_cmd->add_option("--json", eval.json_out, "Write the full report as JSON");
  eval_cmd->add_option("--table", eval.table_out, "Write the text table");

  ScoreOptions score;
  auto* score_cmd = app.add_subcommand("score-transcript", "Score one conversation offline");
  score_cmd->add_option("--conversation", score.conversation, "Conversation file")->required();
  score_cmd->add_option("--corpus", score.corpus, "Corpus for the reply index")->required();
  score_cmd->add_option("--backend", score.backend, "Backend")->capture_default_str();
  score_cmd->add_option("--endpoint", score.endpoint, "Remote completion endpoint URL");
  score_cmd->add_option("--rng-seed", score.rng_seed, "Baseline RNG seed")->capture_default_str();
  score_cmd->add_option("--timeout-ms", score.timeout_ms, "Remote timeout")->capture_default_str();
  score_cmd->add_option("--k", score.k, "Context window size")->capture_default_str();
  score_cmd->add_option("--watch", score.watch, "Watch threshold")->capture_default_str();
  score_cmd->add_option("--likely", score.likely, "Likely threshold")->capture_default_str();
  score_cmd->add_flag("--json", score.as_json, "Emit JSON");

  auto* survey_cmd = app.add_subcommand("survey", "Survey reporting");
  survey_cmd->require_subcommand(1);
  SurveyOptions survey;
  auto* agg_cmd = survey_cmd->add_subcommand("aggregate", "Aggregate survey responses");
  agg_cmd->add_option("--responses", survey.responses, "Responses file, one JSON record per line")->required();
  agg_cmd->add_option("--control-name", survey.control_name, "Column title for the control arm");
  agg_cmd->add_option("--treatment-name", survey.treatment_name, "Column title for the treatment arm");
  agg_cmd->add_flag("--json", survey.as_json, "Emit JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    if (code == 0) return 0;
    std::cerr << app.help();
    return kUsageError;
  }

  try {
    if (*serve_cmd) return run_serve(serve);
    if (*gen_cmd) return run_generate(gen);
    if (*split_cmd) return run_split(split);
    if (*eval_cmd) return run_evaluate(eval);
    if (*score_cmd) return run_score(score);
    if (*agg_cmd) return run_survey(survey);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n' << app.help();
    return kUsageError;
  } catch (const error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsageError;
}
