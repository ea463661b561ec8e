// colonies: operator CLI. Every remote command is one signed API call.

#include <chrono>
#include <pthread.h>
#include <unistd.h>

#include <csignal>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "colonies/api/server.hpp"
#include "colonies/client/client.hpp"
#include "colonies/cluster/sim.hpp"
#include "colonies/core/error.hpp"
#include "colonies/metafs/catalog.hpp"

using namespace colonies;

namespace {

struct Settings {
  std::string host;
  int port = 0;
  std::string colony;
  std::string key_file;
  std::string output = "table";
  std::string config;
};

// flags > env > config file > defaults
void resolve(Settings& s) {
  Json file = Json::object();
  if (!s.config.empty()) {
    std::ifstream in(s.config);
    if (!in) throw Error(Errc::kNotFound, "cannot read " + s.config);
    file = Json::parse(in);
  }
  auto pick = [&](std::string& field, const char* env, const char* key, const char* def) {
    if (!field.empty()) return;
    if (const char* v = std::getenv(env)) {
      field = v;
    } else if (file.contains(key)) {
      field = file.at(key).get<std::string>();
    } else {
      field = def;
    }
  };
  pick(s.host, "COLONIES_SERVER_HOST", "host", "localhost");
  pick(s.colony, "COLONIES_COLONY_ID", "colonyid", "");
  pick(s.key_file, "COLONIES_PRVKEY_FILE", "prvkeyfile", "");
  if (s.port == 0) {
    if (const char* v = std::getenv("COLONIES_SERVER_PORT")) {
      s.port = std::stoi(v);
    } else {
      s.port = file.value("port", 50080);
    }
  }
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kNotFound, "cannot read " + path);
  return Json::parse(in);
}

std::string local_time(Nanos t) {
  if (t <= 0) return "-";
  std::time_t secs = static_cast<std::time_t>(t / kNanosPerSecond);
  std::tm tm{};
  localtime_r(&secs, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%d %H:%M:%S");
  return ss.str();
}

std::string cell(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "";
  return v.dump();
}

// Prints rows with the given columns; `fmt` can rewrite a cell.
void table(const Json& rows, const std::vector<std::string>& cols,
           const std::function<std::string(const std::string&, const Json&)>& fmt = nullptr) {
  std::vector<std::vector<std::string>> cells;
  std::vector<std::size_t> width;
  for (const auto& c : cols) width.push_back(c.size());
  for (const auto& r : rows) {
    std::vector<std::string> line;
    for (std::size_t i = 0; i < cols.size(); ++i) {
      Json v = r.contains(cols[i]) ? r.at(cols[i]) : Json();
      std::string s = fmt ? fmt(cols[i], v) : cell(v);
      width[i] = std::max(width[i], s.size());
      line.push_back(std::move(s));
    }
    cells.push_back(std::move(line));
  }
  auto print = [&](const std::vector<std::string>& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      std::cout << std::left << std::setw(static_cast<int>(width[i]) + 2) << line[i];
    }
    std::cout << "\n";
  };
  std::vector<std::string> upper;
  for (auto c : cols) {
    for (auto& ch : c) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    upper.push_back(c);
  }
  print(upper);
  for (const auto& l : cells) print(l);
}

std::string time_cells(const std::string& col, const Json& v) {
  if (v.is_number_integer() && (col.find("time") != std::string::npos ||
                                col == "added" || col == "created" || col == "lastseen" ||
                                col == "nextdeadline" || col == "lastrun")) {
    return local_time(v.get<Nanos>());
  }
  return cell(v);
}

// Single object: key/value lines.
void record(const Json& obj) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    std::cout << std::left << std::setw(20) << it.key() << time_cells(it.key(), it.value())
              << "\n";
  }
}

struct App {
  Settings s;
  std::unique_ptr<client::Client> cli;

  crypto::PrivateKey key() const {
    if (s.key_file.empty()) {
      throw Error(Errc::kInvalidArgument, "no key file (use --key-file or COLONIES_PRVKEY_FILE)");
    }
    return crypto::load_key(s.key_file);
  }
  const std::string& colony() const {
    if (s.colony.empty()) {
      throw Error(Errc::kInvalidArgument, "no colony (use --colony or COLONIES_COLONY_ID)");
    }
    return s.colony;
  }
  client::Client& c() {
    if (!cli) cli = std::make_unique<client::Client>(s.host, s.port);
    return *cli;
  }
  bool json() const { return s.output == "json"; }

  Json call(const std::string& method, Json payload) {
    return c().call(method, std::move(payload), key());
  }
  void show(const Json& j, const std::vector<std::string>& cols = {}) {
    if (json()) {
      std::cout << j.dump() << "\n";
    } else if (j.is_array()) {
      table(j, cols, time_cells);
    } else if (j.is_object()) {
      record(j);
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  App app;
  CLI::App root{"colonies: manage a colonies server"};
  root.require_subcommand(1);
  root.add_option("--host", app.s.host, "server host");
  root.add_option("--port", app.s.port, "server port");
  root.add_option("--colony", app.s.colony, "colony id");
  root.add_option("--key-file", app.s.key_file, "private key file");
  root.add_option("--output", app.s.output, "table or json")->check(CLI::IsMember({"table", "json"}));
  root.add_option("--config", app.s.config, "client config file (JSON)");

  std::vector<std::function<void()>> actions;
  auto on = [&](CLI::App* sub, std::function<void()> fn) {
    sub->callback([&actions, fn = std::move(fn)] { actions.push_back(fn); });
  };

  // keys
  auto* keys = root.add_subcommand("keys", "key management")->require_subcommand(1);
  std::string key_out;
  auto* keys_new = keys->add_subcommand("new", "generate a private key file");
  keys_new->add_option("--out", key_out, "where to write the key")->required();
  on(keys_new, [&] {
    auto k = crypto::PrivateKey::generate();
    crypto::save_key(key_out, k);
    std::cout << k.identity().str() << "\n";
  });
  on(keys->add_subcommand("id", "print the identity of --key-file"),
     [&] { std::cout << app.key().identity().str() << "\n"; });

  // colony
  auto* colony = root.add_subcommand("colony", "colonies (server owner)")->require_subcommand(1);
  std::string owner_id, colony_name;
  auto* colony_add = colony->add_subcommand("add", "register a colony");
  colony_add->add_option("--owner-id", owner_id, "identity of the colony owner key")->required();
  colony_add->add_option("--name", colony_name, "colony name")->required();
  on(colony_add, [&] {
    app.show(app.call("addcolony", {{"colony", {{"colonyid", owner_id}, {"name", colony_name}}}}));
  });
  on(colony->add_subcommand("ls", "list colonies"),
     [&] { app.show(app.call("getcolonies", Json::object()), {"colonyid", "name"}); });

  // executor
  auto* exec = root.add_subcommand("executor", "executors")->require_subcommand(1);
  std::string exec_id, exec_name, exec_type;
  auto* exec_add = exec->add_subcommand("add", "register an executor (colony owner)");
  exec_add->add_option("--id", exec_id, "executor identity")->required();
  exec_add->add_option("--name", exec_name, "executor name")->required();
  exec_add->add_option("--type", exec_type, "executor type")->required();
  on(exec_add, [&] {
    app.show(app.call("addexecutor", {{"executor",
                                       {{"executorid", exec_id},
                                        {"executorname", exec_name},
                                        {"executortype", exec_type},
                                        {"colonyid", app.colony()}}}}));
  });
  auto* exec_approve = exec->add_subcommand("approve", "approve an executor");
  exec_approve->add_option("id", exec_id)->required();
  on(exec_approve, [&] { app.show(app.call("approveexecutor", {{"executorid", exec_id}})); });
  auto* exec_remove = exec->add_subcommand("remove", "remove an executor");
  exec_remove->add_option("id", exec_id)->required();
  on(exec_remove, [&] { app.show(app.call("removeexecutor", {{"executorid", exec_id}})); });
  on(exec->add_subcommand("ls", "list executors"), [&] {
    app.show(app.call("getexecutors", {{"colonyid", app.colony()}}),
             {"executorid", "executorname", "executortype", "approved", "lastseen"});
  });

  // function
  auto* func = root.add_subcommand("function", "functions")->require_subcommand(1);
  std::string func_name;
  auto* func_reg = func->add_subcommand("register", "advertise a function (signed by the executor)");
  func_reg->add_option("--name", func_name, "function name")->required();
  on(func_reg, [&] {
    app.show(app.call("addfunction", {{"executorid", app.key().identity().str()},
                                      {"colonyid", app.colony()},
                                      {"funcname", func_name}}));
  });

  // submit
  std::string spec_file;
  auto* submit = root.add_subcommand("submit", "submit a function spec");
  submit->add_option("--spec", spec_file, "function spec JSON file")->required();
  on(submit, [&] {
    Json spec = read_json(spec_file);
    if (!spec.contains("conditions")) spec["conditions"] = Json::object();
    if (!spec["conditions"].contains("colonyid")) spec["conditions"]["colonyid"] = app.colony();
    Json p = app.call("submitfuncspec", {{"spec", spec}});
    if (app.json()) {
      std::cout << p.dump() << "\n";
    } else {
      std::cout << p.at("processid").get<std::string>() << "\n";
    }
  });

  // workflow
  auto* wf = root.add_subcommand("workflow", "workflows")->require_subcommand(1);
  std::string wf_file, wf_id;
  auto* wf_submit = wf->add_subcommand("submit", "submit a workflow file");
  wf_submit->add_option("file", wf_file)->required();
  on(wf_submit, [&] {
    Json w = app.call("submitworkflow", {{"colonyid", app.colony()}, {"specs", read_json(wf_file)}});
    if (app.json()) {
      std::cout << w.dump() << "\n";
    } else {
      for (const auto& p : w.at("processes")) {
        std::cout << p.at("processid").get<std::string>() << "\n";
      }
    }
  });
  auto* wf_get = wf->add_subcommand("get", "show a workflow");
  wf_get->add_option("id", wf_id)->required();
  on(wf_get, [&] {
    Json w = app.call("getworkflow", {{"workflowid", wf_id}});
    if (app.json()) {
      std::cout << w.dump() << "\n";
      return;
    }
    std::cout << "workflow " << w.at("workflowid").get<std::string>() << "  "
              << w.at("state").get<std::string>() << "\n";
    Json rows = Json::array();
    for (const auto& p : w.at("processes")) {
      rows.push_back({{"processid", p.at("processid")},
                      {"nodename", p.at("spec").at("nodename")},
                      {"funcname", p.at("spec").at("funcname")},
                      {"state", p.at("state")},
                      {"out", p.at("out")}});
    }
    table(rows, {"processid", "nodename", "funcname", "state", "out"});
  });

  // process
  auto* proc = root.add_subcommand("process", "processes")->require_subcommand(1);
  std::string proc_id, proc_state;
  std::int64_t proc_count = 100;
  auto* proc_ls = proc->add_subcommand("ls", "list processes");
  proc_ls->add_option("--state", proc_state, "waiting, running, successful or failed");
  proc_ls->add_option("--count", proc_count, "max rows");
  on(proc_ls, [&] {
    Json payload = {{"colonyid", app.colony()}, {"count", proc_count}};
    if (!proc_state.empty()) payload["state"] = proc_state;
    Json list = app.call("getprocesses", payload);
    if (app.json()) {
      std::cout << list.dump() << "\n";
      return;
    }
    Json rows = Json::array();
    for (const auto& p : list) {
      rows.push_back({{"processid", p.at("processid")},
                      {"funcname", p.at("spec").at("funcname")},
                      {"state", p.at("state")},
                      {"submissiontime", p.at("submissiontime")}});
    }
    table(rows, {"processid", "funcname", "state", "submissiontime"}, time_cells);
  });
  auto* proc_get = proc->add_subcommand("get", "show a process");
  proc_get->add_option("id", proc_id)->required();
  on(proc_get, [&] { app.show(app.call("getprocess", {{"processid", proc_id}})); });
  auto* proc_sub = proc->add_subcommand("subscribe", "stream state changes until terminal");
  proc_sub->add_option("id", proc_id)->required();
  on(proc_sub, [&] {
    app.c().subscribe(proc_id, app.key(), [&](const Json& e) {
      if (app.json()) {
        std::cout << e.dump() << std::endl;
      } else {
        std::cout << local_time(e.value("time", Nanos{0})) << "  " << e.value("action", "")
                  << "  " << e.value("state", "") << std::endl;
      }
      return true;
    });
  });

  // cron
  auto* cron = root.add_subcommand("cron", "crons")->require_subcommand(1);
  std::string cron_name, cron_expr, cron_wf;
  std::int64_t cron_interval = 0;
  auto* cron_add = cron->add_subcommand("add", "add a cron");
  cron_add->add_option("--name", cron_name)->required();
  cron_add->add_option("--interval", cron_interval, "seconds");
  cron_add->add_option("--expr", cron_expr, "5-field cron expression");
  cron_add->add_option("--workflow", cron_wf, "workflow JSON file")->required();
  on(cron_add, [&] {
    app.show(app.call("addcron", {{"cron",
                                   {{"colonyid", app.colony()},
                                    {"name", cron_name},
                                    {"interval", cron_interval},
                                    {"cronexpr", cron_expr},
                                    {"workflow", read_json(cron_wf)}}}}));
  });
  on(cron->add_subcommand("ls", "list crons"), [&] {
    app.show(app.call("getcrons", {{"colonyid", app.colony()}}),
             {"cronid", "name", "interval", "cronexpr", "nextdeadline", "lastrun"});
  });

  // generator
  auto* gen = root.add_subcommand("generator", "generators")->require_subcommand(1);
  std::string gen_name, gen_wf, gen_id, gen_payload;
  std::int64_t gen_count = 0, gen_timeout = -1;
  auto* gen_add = gen->add_subcommand("add", "add a generator");
  gen_add->add_option("--name", gen_name)->required();
  gen_add->add_option("--trigger-count", gen_count)->required();
  gen_add->add_option("--timeout", gen_timeout, "seconds; -1 disables partial batches");
  gen_add->add_option("--workflow", gen_wf, "workflow JSON file")->required();
  on(gen_add, [&] {
    app.show(app.call("addgenerator", {{"generator",
                                        {{"colonyid", app.colony()},
                                         {"name", gen_name},
                                         {"triggercount", gen_count},
                                         {"timeout", gen_timeout},
                                         {"workflow", read_json(gen_wf)}}}}));
  });
  auto* gen_pack = gen->add_subcommand("pack", "send one payload to a generator");
  gen_pack->add_option("id", gen_id)->required();
  gen_pack->add_option("--payload", gen_payload, "JSON value")->required();
  on(gen_pack, [&] {
    Json payload;
    try {
      payload = Json::parse(gen_payload);
    } catch (const Json::exception&) {
      payload = gen_payload;  // bare strings
    }
    app.show(app.call("pack", {{"generatorid", gen_id}, {"payload", payload}}));
  });
  on(gen->add_subcommand("ls", "list generators"), [&] {
    app.show(app.call("getgenerators", {{"colonyid", app.colony()}}),
             {"generatorid", "name", "triggercount", "timeout"});
  });

  // fs
  auto* fsc = root.add_subcommand("fs", "colony filesystem")->require_subcommand(1);
  std::string fs_label = "/", fs_dir, storage_dir, s3_endpoint, s3_bucket = "colonies";
  auto add_storage = [&](CLI::App* sub) {
    sub->add_option("--storage-dir", storage_dir, "local object directory");
    sub->add_option("--s3-endpoint", s3_endpoint, "S3 endpoint, e.g. http://127.0.0.1:9000");
    sub->add_option("--s3-bucket", s3_bucket, "S3 bucket");
  };
  auto drivers = [&] {
    metafs::Drivers d;
    if (!s3_endpoint.empty()) d.add(std::make_shared<metafs::S3Driver>(s3_endpoint, s3_bucket));
    if (!storage_dir.empty()) d.add(std::make_shared<metafs::LocalDirDriver>(storage_dir));
    if (d.empty()) throw Error(Errc::kInvalidArgument, "give --storage-dir or --s3-endpoint");
    return d;
  };
  auto* fs_sync = fsc->add_subcommand("sync", "upload a directory under a label");
  fs_sync->add_option("--label", fs_label)->required();
  fs_sync->add_option("--dir", fs_dir)->required();
  add_storage(fs_sync);
  on(fs_sync, [&] {
    metafs::Drivers d = drivers();
    client::ApiCatalog catalog(app.c(), app.key());
    std::map<std::string, std::string> remote;
    std::string label = metafs::normalize_label(fs_label);
    for (const auto& f : catalog.list_files(app.colony(), label)) {
      std::string rel = f.label == label ? f.name
                        : (label == "/" ? f.label.substr(1) : f.label.substr(label.size() + 1)) +
                              "/" + f.name;
      remote[rel] = f.checksum;
    }
    auto local = metafs::local_checksums(fs_dir);
    Json added = Json::array();
    for (const auto& rel : metafs::plan_upload(local, remote, true)) {
      std::ifstream in(std::filesystem::path(fs_dir) / rel, std::ios::binary);
      std::string content((std::istreambuf_iterator<char>(in)), {});
      FileMeta meta;
      meta.colony_id = app.colony();
      auto slash = rel.rfind('/');
      meta.label = slash == std::string::npos ? label
                   : (label == "/" ? "" : label) + "/" + rel.substr(0, slash);
      meta.name = slash == std::string::npos ? rel : rel.substr(slash + 1);
      meta.checksum = metafs::checksum_of(content);
      meta.size = static_cast<std::int64_t>(content.size());
      meta.storage = d.primary().put(content);
      added.push_back(to_json(catalog.add_file(meta)));
    }
    app.show(added, {"label", "name", "revision", "checksum"});
  });
  auto* fs_ls = fsc->add_subcommand("ls", "list files under a label");
  fs_ls->add_option("--label", fs_label);
  on(fs_ls, [&] {
    app.show(app.call("getfiles", {{"colonyid", app.colony()}, {"label", fs_label}}),
             {"label", "name", "revision", "size", "added"});
  });
  auto* fs_get = fsc->add_subcommand("get", "download a snapshot into a directory");
  std::string snap_id;
  fs_get->add_option("--snapshot", snap_id)->required();
  fs_get->add_option("--dir", fs_dir)->required();
  add_storage(fs_get);
  on(fs_get, [&] {
    metafs::Drivers d = drivers();
    client::ApiCatalog catalog(app.c(), app.key());
    metafs::materialize(catalog, d, catalog.get_snapshot(snap_id), fs_dir);
  });
  auto* fs_snap = fsc->add_subcommand("snapshot", "snapshots")->require_subcommand(1);
  auto* snap_create = fs_snap->add_subcommand("create", "pin the files under a label");
  snap_create->add_option("--label", fs_label)->required();
  on(snap_create, [&] {
    app.show(app.call("createsnapshot", {{"colonyid", app.colony()}, {"label", fs_label}}));
  });
  on(fs_snap->add_subcommand("ls", "list snapshots"), [&] {
    app.show(app.call("getsnapshots", {{"colonyid", app.colony()}}),
             {"snapshotid", "label", "created"});
  });

  // statistics
  on(root.add_subcommand("stats", "process counts for the colony"),
     [&] { app.show(app.call("getstatistics", {{"colonyid", app.colony()}})); });

  // server
  auto* server = root.add_subcommand("server", "run a server")->require_subcommand(1);
  std::string server_config;
  int server_port = 0;
  auto* server_start = server->add_subcommand("start", "start serving");
  server_start->add_option("--config", server_config, "server config JSON");
  server_start->add_option("--port", server_port, "listen port");
  on(server_start, [&] {
    api::ServerConfig cfg;
    if (!server_config.empty()) cfg = api::load_server_config(server_config);
    api::apply_env_overrides(cfg);
    if (server_port != 0) cfg.http.port = server_port;
    api::ColoniesServer srv(cfg);
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    std::thread([&srv, set] {
      int sig = 0;
      sigwait(&set, &sig);
      srv.stop();
    }).detach();
    srv.start();
    std::cerr << "listening on " << cfg.http.host << ":" << srv.port() << "\n";
    srv.wait();
  });

  // store
  auto* st = root.add_subcommand("store", "offline store tools")->require_subcommand(1);
  std::string db, dump_file;
  auto* st_dump = st->add_subcommand("dump", "print every table as JSON");
  st_dump->add_option("--db", db)->required();
  on(st_dump, [&] {
    store::StoreOptions o;
    o.path = db;
    store::Store s(o);
    std::cout << s.dump().dump(2) << "\n";
  });
  auto* st_load = st->add_subcommand("load", "import a dump into an empty store");
  st_load->add_option("--db", db)->required();
  st_load->add_option("file", dump_file)->required();
  on(st_load, [&] {
    store::StoreOptions o;
    o.path = db;
    store::Store s(o);
    s.load(read_json(dump_file));
  });

  // cluster
  auto* cl = root.add_subcommand("cluster", "cluster")->require_subcommand(1);
  on(cl->add_subcommand("status", "leadership as seen by the server"),
     [&] { app.show(app.call("getcluster", Json::object())); });
  std::string scenario_file, sim_db;
  std::uint64_t sim_seed = 1;
  std::int64_t sim_ms = 10'000;
  auto* cl_sim = cl->add_subcommand("simulate", "run a fault scenario in the simulation harness");
  cl_sim->add_option("--scenario", scenario_file, "JSON list of {at_ms, action, target}")->required();
  cl_sim->add_option("--seed", sim_seed);
  cl_sim->add_option("--duration-ms", sim_ms);
  cl_sim->add_option("--db", sim_db, "scratch store file");
  on(cl_sim, [&] {
    cluster::SimOptions o;
    o.seed = sim_seed;
    o.db = sim_db.empty()
               ? std::filesystem::temp_directory_path() /
                     ("colonies-sim-" + std::to_string(::getpid()) + ".db")
               : std::filesystem::path(sim_db);
    Json result = cluster::harness_run(read_json(scenario_file), o, millis(sim_ms));
    if (sim_db.empty()) {
      for (const char* suffix : {"", "-wal", "-shm"}) {
        std::filesystem::remove(o.db.string() + suffix);
      }
    }
    std::cout << result.dump(app.json() ? -1 : 2) << "\n";
  });

  try {
    root.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return root.exit(e);
  }
  try {
    resolve(app.s);
    for (auto& a : actions) a();
  } catch (const Error& e) {
    std::cerr << Json{{"error", {{"code", std::string(errc_name(e.code()))},
                                 {"message", e.what()}}}}
                     .dump()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", {{"code", "internal"}, {"message", e.what()}}}}.dump() << "\n";
    return 1;
  }
  return 0;
}
