#include "colonies/executor/runtime.hpp"

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstring>
#include <thread>

#include <spdlog/spdlog.h>

#include "colonies/core/error.hpp"

namespace colonies::executor {
namespace {

Json number(double v) {
  if (std::isfinite(v) && std::floor(v) == v && std::fabs(v) < 9.0e15) {
    return static_cast<std::int64_t>(v);
  }
  return v;
}

double as_number(const Json& v, const char* what) {
  if (!v.is_number()) throw Error(Errc::kInvalidArgument, std::string(what) + " is not a number");
  return v.get<double>();
}

Json square(const Process& p, const ExecContext&) {
  const Json& kw = p.spec.kwargs;
  Json x;
  if (kw.contains("index")) {
    auto i = kw.at("index").get<std::int64_t>();
    if (i < 0 || i >= static_cast<std::int64_t>(p.input.size())) {
      throw Error(Errc::kInvalidArgument, "square: index out of range");
    }
    x = p.input.at(static_cast<std::size_t>(i));
  } else if (!p.spec.args.empty()) {
    x = p.spec.args.at(0);
  } else if (p.input.size() == 1) {
    x = p.input.at(0);
  } else {
    throw Error(Errc::kInvalidArgument, "square takes exactly one operand");
  }
  double v = as_number(x, "square operand");
  return Json::array({number(v * v)});
}

Json sum(const Process& p, const ExecContext&) {
  const Json& src = p.input.empty() ? p.spec.args : p.input;
  double total = 0;
  for (const auto& v : src) total += as_number(v, "sum operand");
  return Json::array({number(total)});
}

struct Pipe {
  int fd[2] = {-1, -1};
  Pipe() {
    if (::pipe(fd) != 0) throw Error(Errc::kInternal, "pipe failed");
  }
  ~Pipe() {
    for (int f : fd) {
      if (f >= 0) ::close(f);
    }
  }
  void close_end(int i) {
    ::close(fd[i]);
    fd[i] = -1;
  }
};

// Runs argv[0] with argv, returns (exit status, stdout, stderr).
std::tuple<int, std::string, std::string> run_command(const std::vector<std::string>& argv,
                                                      const std::filesystem::path& cwd) {
  Pipe out, err;
  pid_t pid = ::fork();
  if (pid < 0) throw Error(Errc::kInternal, "fork failed");
  if (pid == 0) {
    ::dup2(out.fd[1], 1);
    ::dup2(err.fd[1], 2);
    if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) ::_exit(126);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    ::execvp(args[0], args.data());
    ::_exit(127);
  }
  out.close_end(1);
  err.close_end(1);
  std::string o, e;
  pollfd fds[2] = {{out.fd[0], POLLIN, 0}, {err.fd[0], POLLIN, 0}};
  int open = 2;
  char buf[4096];
  while (open > 0) {
    if (::poll(fds, 2, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (int i = 0; i < 2; ++i) {
      if (fds[i].fd < 0 || !(fds[i].revents & (POLLIN | POLLHUP | POLLERR))) continue;
      ssize_t n = ::read(fds[i].fd, buf, sizeof buf);
      if (n <= 0) {
        fds[i].fd = -1;
        --open;
      } else {
        (i == 0 ? o : e).append(buf, static_cast<std::size_t>(n));
      }
    }
  }
  int status = 0;
  ::waitpid(pid, &status, 0);
  int code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return {code, o, e};
}

Json execute_command(const Process& p, const ExecContext& ctx) {
  const Json& kw = p.spec.kwargs;
  std::vector<std::string> argv;
  if (kw.contains("cmd")) {
    argv.push_back(kw.at("cmd").get<std::string>());
    for (const auto& a : kw.value("args", Json::array())) argv.push_back(a.get<std::string>());
  } else {
    for (const auto& a : p.spec.args) argv.push_back(a.get<std::string>());
  }
  if (argv.empty() || argv[0].empty()) {
    throw Error(Errc::kInvalidArgument, "execute needs a command");
  }
  std::string mount = p.spec.fs ? p.spec.fs->mount : std::string();
  for (auto& a : argv) {
    a = metafs::substitute(a, p.process_id, "");
    // Paths under the mount point are rewritten into the workspace.
    if (!mount.empty() && !ctx.workdir.empty() && a.rfind(mount, 0) == 0 &&
        (a.size() == mount.size() || a[mount.size()] == '/')) {
      a = (ctx.workdir.string() + a.substr(mount.size()));
    }
  }
  auto [code, out, err] = run_command(argv, ctx.workdir);
  if (code != 0) {
    throw Error(Errc::kInternal,
                argv[0] + " exited with " + std::to_string(code) + ": " + err.substr(0, 2000));
  }
  Json lines = Json::array();
  std::size_t start = 0;
  while (start < out.size()) {
    auto nl = out.find('\n', start);
    if (nl == std::string::npos) nl = out.size();
    lines.push_back(out.substr(start, nl - start));
    start = nl + 1;
  }
  return lines;
}

const char* kind_name(Lifecycle::Kind k) {
  switch (k) {
    case Lifecycle::Kind::kAssigned: return "assigned";
    case Lifecycle::Kind::kClosed: return "closed";
    case Lifecycle::Kind::kFailed: return "failed";
    case Lifecycle::Kind::kAbandoned: return "abandoned";
  }
  return "?";
}

}  // namespace

std::map<std::string, std::function<Json(const Process&, const ExecContext&)>>
builtin_functions(bool allow_exec) {
  std::map<std::string, std::function<Json(const Process&, const ExecContext&)>> f;
  f["echo"] = [](const Process& p, const ExecContext&) {
    return p.spec.args.empty() ? p.input : p.spec.args;
  };
  f["helloworld"] = [](const Process&, const ExecContext&) {
    return Json::array({"hello world"});
  };
  f["gen_nums"] = [](const Process&, const ExecContext&) { return Json::array({2, 3}); };
  f["square"] = square;
  f["sum"] = sum;
  if (allow_exec) f["execute"] = execute_command;
  return f;
}

ExecutorRuntime::ExecutorRuntime(crypto::PrivateKey key, RuntimeOptions options,
                                 const Clock* clock)
    : key_(std::move(key)),
      id_(key_.identity().str()),
      options_(std::move(options)),
      clock_(clock ? clock : &system_),
      client_(options_.host, options_.port, clock_),
      functions_(builtin_functions(options_.allow_exec)) {}

ExecutorRecord ExecutorRuntime::register_with(const crypto::PrivateKey& colony_key) {
  ExecutorRecord e;
  e.executor_id = id_;
  e.executor_name = options_.name;
  e.executor_type = options_.type;
  e.colony_id = options_.colony_id;
  client_.add_executor(e, colony_key);
  e = client_.approve_executor(id_, colony_key);
  for (const auto& fn : options_.functions) {
    e = client_.add_function(id_, options_.colony_id, fn, key_);
  }
  return e;
}

void ExecutorRuntime::add_function(const std::string& name, Function fn) {
  functions_[name] = [fn = std::move(fn)](const Process& p, const ExecContext&) { return fn(p); };
}

void ExecutorRuntime::emit(Lifecycle::Kind kind, const Process& p) {
  spdlog::info(R"({{"event":"{}","executorid":"{}","processid":"{}","funcname":"{}"}})",
               kind_name(kind), id_, p.process_id, p.spec.func_name);
  if (observer_) observer_({kind, p.process_id, p.spec.func_name, clock_->now()});
}

bool ExecutorRuntime::pause(std::chrono::milliseconds d) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, d, [this] { return killed_.load(); });
  return !killed_.load();
}

Json ExecutorRuntime::execute(const Process& p, const ExecContext& ctx) {
  auto it = functions_.find(p.spec.func_name);
  if (it == functions_.end()) {
    throw Error(Errc::kInvalidArgument, "unknown function " + p.spec.func_name);
  }
  Json out = it->second(p, ctx);
  if (!out.is_array()) out = Json::array({out});
  return out;
}

bool ExecutorRuntime::step() {
  if (killed_.load()) return false;
  std::optional<Process> got;
  try {
    in_assign_.store(true);
    got = client_.assign(options_.colony_id, options_.poll_timeout_seconds, key_);
    in_assign_.store(false);
  } catch (const Error& e) {
    in_assign_.store(false);
    if (killed_.load() || stopping_.load()) return false;
    spdlog::warn(R"({{"event":"assign-error","executorid":"{}","code":"{}","message":"{}"}})",
                 id_, errc_name(e.code()), e.what());
    pause(std::chrono::milliseconds(200));
    return false;
  }
  if (!got) return false;
  const Process& p = *got;
  if (killed_.load()) return true;  // claimed after the crash; nobody closes it
  emit(Lifecycle::Kind::kAssigned, p);

  std::string colony = p.spec.conditions.colony_id;
  client::ApiCatalog catalog(client_, key_);
  metafs::Workspace ws;
  ExecContext ctx;
  bool ok = false;
  Json output;
  std::string error;
  try {
    if (p.spec.fs) {
      if (options_.fs_root.empty() || !options_.drivers) {
        throw Error(Errc::kInvalidArgument, "executor has no fs workdir configured");
      }
      ctx.workdir = options_.fs_root / p.process_id /
                    std::filesystem::path(p.spec.fs->mount).relative_path();
      ws = metafs::sync_before_exec(*p.spec.fs, p.process_id, colony, catalog,
                                    *options_.drivers, options_.fs_root / p.process_id);
    }
    output = execute(p, ctx);
    if (options_.exec_delay.count() > 0 && !pause(options_.exec_delay)) {
      emit(Lifecycle::Kind::kAbandoned, p);
      return true;
    }
    if (killed_.load()) {
      emit(Lifecycle::Kind::kAbandoned, p);
      return true;
    }
    if (p.spec.fs) {
      metafs::sync_after_exec(*p.spec.fs, p.process_id, colony, catalog, *options_.drivers,
                              options_.fs_root / p.process_id, ws);
    }
    ok = true;
  } catch (const std::exception& e) {
    error = e.what();
  }
  if (killed_.load()) {
    emit(Lifecycle::Kind::kAbandoned, p);
    return true;
  }
  try {
    if (ok) {
      client_.close(p.process_id, output, key_);
      emit(Lifecycle::Kind::kClosed, p);
    } else {
      client_.fail(p.process_id, {error}, key_);
      emit(Lifecycle::Kind::kFailed, p);
    }
    if (p.spec.fs) metafs::finish_workspace(ws, catalog, ok);
  } catch (const std::exception& e) {
    spdlog::warn(R"({{"event":"close-error","executorid":"{}","processid":"{}","message":"{}"}})",
                 id_, p.process_id, e.what());
  }
  return true;
}

void ExecutorRuntime::run() {
  while (!stopping_.load() && !killed_.load()) step();
}

void ExecutorRuntime::stop() {
  stopping_.store(true);
  if (in_assign_.load()) client_.abort();
}

void ExecutorRuntime::kill() {
  {
    std::lock_guard lock(mu_);
    killed_.store(true);
  }
  cv_.notify_all();
  client_.abort();
}

}  // namespace colonies::executor
