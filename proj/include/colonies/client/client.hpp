#pragma once

// Signed API client. Every call is signed independently with the key passed
// to it; the client holds no session.

#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "colonies/core/clock.hpp"
#include "colonies/core/model.hpp"
#include "colonies/crypto/keys.hpp"
#include "colonies/metafs/sync.hpp"

namespace httplib {
class Client;
}

namespace colonies::client {

class Client {
 public:
  // `clock` stamps envelopes; the system clock when null.
  Client(std::string host, int port, const Clock* clock = nullptr);
  ~Client();

  // Raw method call. Returns the response payload (null for 204). Server
  // errors are rethrown as Error with the server's code; transport failures
  // throw kConnectionRefused.
  Json call(const std::string& method, Json payload, const crypto::PrivateKey& key,
            std::chrono::seconds read_timeout = std::chrono::seconds(60));

  // Sees every request body before it is sent.
  void set_wire_tap(std::function<void(const std::string&)> tap) { tap_ = std::move(tap); }
  // Aborts the request in flight, if any; later calls still work.
  void abort();

  Colony add_colony(const Colony& colony, const crypto::PrivateKey& server_key);
  void remove_colony(const std::string& colony_id, const crypto::PrivateKey& server_key);
  std::vector<Colony> get_colonies(const crypto::PrivateKey& server_key);

  ExecutorRecord add_executor(const ExecutorRecord& e, const crypto::PrivateKey& colony_key);
  ExecutorRecord approve_executor(const std::string& executor_id,
                                  const crypto::PrivateKey& colony_key);
  void remove_executor(const std::string& executor_id, const crypto::PrivateKey& colony_key);
  std::vector<ExecutorRecord> get_executors(const std::string& colony_id,
                                            const crypto::PrivateKey& key);
  ExecutorRecord add_function(const std::string& executor_id, const std::string& colony_id,
                              const std::string& func_name,
                              const crypto::PrivateKey& executor_key);

  Process submit(const FunctionSpec& spec, const crypto::PrivateKey& key);
  // Returns the workflow document: {workflowid, colonyid, state, processes}.
  Json submit_workflow(const std::string& colony_id, const std::vector<FunctionSpec>& specs,
                       const crypto::PrivateKey& key);
  Json get_workflow(const std::string& workflow_id, const crypto::PrivateKey& key);
  // nullopt when the server's timer expired with nothing to hand out.
  std::optional<Process> assign(const std::string& colony_id, double timeout_seconds,
                                const crypto::PrivateKey& executor_key);
  Process close(const std::string& process_id, const Json& output,
                const crypto::PrivateKey& executor_key);
  Process fail(const std::string& process_id, const std::vector<std::string>& errors,
               const crypto::PrivateKey& executor_key);
  Process get_process(const std::string& process_id, const crypto::PrivateKey& key);
  std::vector<Process> get_processes(const std::string& colony_id,
                                     std::optional<ProcessState> state, std::int64_t count,
                                     const crypto::PrivateKey& key);
  Process add_child(const std::string& parent_id, const FunctionSpec& spec,
                    bool insert_before, const crypto::PrivateKey& executor_key);
  // Calls `on_event` per audit event until the process is terminal or the
  // callback returns false.
  void subscribe(const std::string& process_id, const crypto::PrivateKey& key,
                 const std::function<bool(const Json&)>& on_event);

  CronDef add_cron(const CronDef& cron, const crypto::PrivateKey& key);
  std::vector<CronDef> get_crons(const std::string& colony_id, const crypto::PrivateKey& key);
  GeneratorDef add_generator(const GeneratorDef& g, const crypto::PrivateKey& key);
  void pack(const std::string& generator_id, const Json& payload,
            const crypto::PrivateKey& key);

  Json statistics(const std::string& colony_id, const crypto::PrivateKey& key);
  Json cluster_status(const crypto::PrivateKey& server_key);

 private:
  std::shared_ptr<httplib::Client> connect(std::chrono::seconds read_timeout);
  void release(const std::shared_ptr<httplib::Client>& c);

  std::string host_;
  int port_;
  const Clock* clock_;
  SystemClock system_;
  std::function<void(const std::string&)> tap_;
  std::mutex mu_;
  std::shared_ptr<httplib::Client> active_;
};

// The CFS catalog seen through the API, signed with one key.
class ApiCatalog final : public metafs::Catalog {
 public:
  ApiCatalog(Client& client, crypto::PrivateKey key) : client_(client), key_(std::move(key)) {}
  FileMeta add_file(const FileMeta& meta) override;
  FileMeta get_file(const std::string& file_id) override;
  std::vector<FileMeta> list_files(const std::string& colony_id,
                                   const std::string& label) override;
  Snapshot create_snapshot(const std::string& colony_id, const std::string& label) override;
  Snapshot get_snapshot(const std::string& snapshot_id) override;
  void remove_snapshot(const std::string& snapshot_id) override;

 private:
  Client& client_;
  crypto::PrivateKey key_;
};

}  // namespace colonies::client
