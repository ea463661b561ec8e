#pragma once

// Transport-independent request handling: authenticate the envelope,
// authorize the recovered identity, run the operation, build the reply.
// Handlers keep nothing between requests.

#include <memory>
#include <optional>
#include <string>

#include "colonies/api/leadership.hpp"
#include "colonies/assign/assign.hpp"
#include "colonies/core/ids.hpp"
#include "colonies/crypto/keys.hpp"
#include "colonies/store/store.hpp"

namespace colonies::api {

struct Reply {
  int status = 200;
  Json body;  // null for 204
  // Set for subscribe: the transport streams events from it.
  std::shared_ptr<assign::Subscription> stream;
  // Set when an assign must go to the leader at this URL.
  std::optional<std::string> forward_to;

  static Reply error(Errc code, const std::string& message);
};

struct HandlerOptions {
  assign::AssignOptions assign;
  std::int64_t max_list = 10'000;
};

class ApiHandler {
 public:
  ApiHandler(store::Store& store, const Clock& clock, IdSource& ids,
             assign::WakeupHub& hub, Leadership& leadership,
             crypto::Identity server_owner, HandlerOptions options = {});

  // Never throws: every failure becomes an error reply.
  Reply handle(const std::string& body, const std::atomic<bool>* cancel = nullptr);

  assign::Assigner& assigner() { return assigner_; }
  store::Store& store() { return store_; }
  const crypto::Identity& server_owner() const { return server_owner_; }

 private:
  struct Call;
  Reply dispatch(Call& call);

  store::Store& store_;
  const Clock& clock_;
  IdSource& ids_;
  assign::WakeupHub& hub_;
  Leadership& leadership_;
  crypto::Identity server_owner_;
  HandlerOptions options_;
  assign::Assigner assigner_;
};

}  // namespace colonies::api
