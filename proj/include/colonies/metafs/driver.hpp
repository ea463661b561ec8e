#pragma once

// Storage backends for CFS content. Objects are addressed by the SHA3-256
// of their bytes, and every read is verified against the recorded checksum.

#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include "colonies/core/model.hpp"

namespace colonies::metafs {

std::string checksum_of(std::string_view content);

class StorageDriver {
 public:
  virtual ~StorageDriver() = default;
  virtual std::string protocol() const = 0;
  virtual StorageRef put(const std::string& content) = 0;
  // Throws kStorageUnreachable or kNotFound.
  virtual std::string fetch(const StorageRef& ref) = 0;

  // fetch() plus the integrity check. Throws kChecksumMismatch.
  std::string get(const StorageRef& ref, const std::string& checksum);
};

class LocalDirDriver final : public StorageDriver {
 public:
  explicit LocalDirDriver(std::filesystem::path root);
  std::string protocol() const override { return "local"; }
  StorageRef put(const std::string& content) override;
  std::string fetch(const StorageRef& ref) override;
  std::filesystem::path object_path(const std::string& key) const;

 private:
  std::filesystem::path root_;
};

// Path-style S3 PUT/GET against an endpoint such as "http://127.0.0.1:9000".
// Requests are unsigned; run it behind a gateway that handles credentials.
class S3Driver final : public StorageDriver {
 public:
  S3Driver(std::string endpoint, std::string bucket);
  std::string protocol() const override { return "s3"; }
  StorageRef put(const std::string& content) override;
  std::string fetch(const StorageRef& ref) override;

 private:
  std::string endpoint_;
  std::string bucket_;
};

// protocol -> driver
class Drivers {
 public:
  void add(std::shared_ptr<StorageDriver> driver);
  StorageDriver& at(const std::string& protocol) const;
  StorageDriver& primary() const;
  bool empty() const { return drivers_.empty(); }

 private:
  std::map<std::string, std::shared_ptr<StorageDriver>> drivers_;
  std::string primary_;
};

}  // namespace colonies::metafs
