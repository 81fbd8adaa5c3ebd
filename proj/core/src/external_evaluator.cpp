#include <fcntl.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <csignal>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "exitnas/errors.hpp"
#include "exitnas/oracle.hpp"
#include "exitnas/serialization.hpp"

extern char** environ;

namespace exitnas {

namespace {

std::atomic<std::uint64_t> workdir_counter{0};

std::filesystem::path make_workdir(const std::filesystem::path& root) {
  std::filesystem::create_directories(root);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const auto n = workdir_counter.fetch_add(1);
    auto dir = root / ("exitnas-eval-" + std::to_string(::getpid()) + "-" + std::to_string(n));
    if (std::filesystem::create_directory(dir)) {
      return dir;
    }
  }
  throw EvaluatorUnavailable("cannot create an evaluation directory under " + root.string());
}

/// Runs `command request` with cwd = workdir, stdout/stderr to log files.
/// Returns the exit status; throws EvaluatorUnavailable on spawn failure or timeout.
int run_process(const std::filesystem::path& command, const std::filesystem::path& request,
                const std::filesystem::path& workdir, std::chrono::milliseconds timeout) {
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  const std::string out_log = (workdir / "stdout.log").string();
  const std::string err_log = (workdir / "stderr.log").string();
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, out_log.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, err_log.c_str(),
                                   O_WRONLY | O_CREAT | O_TRUNC, 0644);

  const std::string cmd = command.string();
  const std::string req = request.string();
  std::vector<char*> argv{const_cast<char*>(cmd.c_str()), const_cast<char*>(req.c_str()),
                          nullptr};

  // posix_spawn has no portable chdir action; the request carries absolute paths.
  pid_t pid = 0;
  const int rc = posix_spawn(&pid, cmd.c_str(), &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) {
    throw EvaluatorUnavailable("cannot launch " + cmd + ": " + std::strerror(rc));
  }

  const auto deadline = std::chrono::steady_clock::now() + timeout;
  auto poll = std::chrono::milliseconds(1);
  while (true) {
    int status = 0;
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) {
      if (WIFEXITED(status)) {
        return WEXITSTATUS(status);
      }
      return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
    }
    if (done < 0 && errno != EINTR) {
      throw EvaluatorUnavailable("waitpid failed for " + cmd);
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw EvaluatorUnavailable("evaluator timed out after " + std::to_string(timeout.count()) +
                                 " ms: " + cmd);
    }
    std::this_thread::sleep_for(poll);
    poll = std::min(poll * 2, std::chrono::milliseconds(100));
  }
}

std::string tail_of(const std::filesystem::path& path, std::size_t max_bytes = 400) {
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text.size() > max_bytes ? text.substr(text.size() - max_bytes) : text;
}

} // namespace

void EvaluatorRequest::validate() const {
  if (training_epochs < 1) {
    throw ContractViolation("evaluator request: training_epochs must be >= 1");
  }
  if (dataset.empty()) {
    throw ContractViolation("evaluator request: dataset id is empty");
  }
  if (!is_valid(genome, space)) {
    throw ContractViolation("evaluator request: genome invalid for the search space");
  }
}

nlohmann::json to_request_json(const EvaluatorRequest& req) {
  return nlohmann::json{{"schema_version", kEvaluatorSchemaVersion},
                        {"genome", req.genome},
                        {"space", req.space},
                        {"dataset", req.dataset},
                        {"training_epochs", req.training_epochs},
                        {"loss_weight", req.loss_weight},
                        {"seed", req.seed},
                        {"output_path", req.output_path.string()},
                        {"trace_encoding", to_string(req.trace_encoding)}};
}

EvaluationResult validate_response(TraceDocument doc, const Genome& g) {
  const auto expected = g.thresholds.enabled_positions();
  if (doc.trace.n_exits != expected.size() + 1) {
    throw MalformedTrace("n_exits", "expected " + std::to_string(expected.size() + 1) +
                                        " columns (enabled exits + final), got " +
                                        std::to_string(doc.trace.n_exits));
  }
  if (doc.trace.exit_positions != expected) {
    throw MalformedTrace("exit_positions", "do not match the genome's enabled exits");
  }
  if (!doc.footer) {
    throw MalformedTrace("footer", "missing response footer");
  }
  EvaluationResult result;
  result.measured_error = doc.footer->measured_error;
  result.footer = std::move(doc.footer);
  result.trace = std::move(doc.trace);
  return result;
}

EvaluationResult external_evaluate(const EvaluatorRequest& req, const ExternalEndpoint& endpoint) {
  req.validate();
  const auto workdir = make_workdir(endpoint.work_root);
  struct Cleanup {
    const std::filesystem::path& dir;
    bool keep;
    ~Cleanup() {
      if (!keep) {
        std::error_code ec;
        std::filesystem::remove_all(dir, ec);
      }
    }
  } cleanup{workdir, endpoint.keep_workdir};

  EvaluatorRequest request = req;
  if (request.output_path.empty()) {
    request.output_path = workdir / "trace.out";
  }
  const auto request_path = workdir / "request.json";
  {
    std::ofstream out(request_path);
    out << to_request_json(request).dump(2) << '\n';
    if (!out) {
      throw EvaluatorUnavailable("cannot write " + request_path.string());
    }
  }

  const int status = run_process(endpoint.command, request_path, workdir, endpoint.timeout);
  if (status != 0) {
    throw EvaluatorUnavailable("evaluator exited with status " + std::to_string(status) + ": " +
                               tail_of(workdir / "stderr.log"));
  }
  if (!std::filesystem::exists(request.output_path)) {
    throw MalformedTrace("output_path", "evaluator wrote no trace to " +
                                            request.output_path.string());
  }
  return validate_response(read_trace(request.output_path), req.genome);
}

EvaluationResult ExternalEvaluator::evaluate(const Genome& g, std::uint64_t seed) {
  EvaluatorRequest req;
  req.genome = g;
  req.space = space_;
  req.dataset = dataset_;
  req.training_epochs = training_epochs_;
  req.loss_weight = loss_weight_;
  req.seed = seed;
  return external_evaluate(req, endpoint_);
}

} // namespace exitnas
