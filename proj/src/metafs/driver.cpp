#include "colonies/metafs/driver.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "httplib.h"

#include "colonies/core/error.hpp"
#include "colonies/crypto/hash.hpp"

namespace colonies::metafs {
namespace fs = std::filesystem;

std::string checksum_of(std::string_view content) {
  return crypto::sha3_256_hex(content);
}

std::string StorageDriver::get(const StorageRef& ref, const std::string& checksum) {
  std::string content = fetch(ref);
  if (checksum_of(content) != checksum) {
    throw Error(Errc::kChecksumMismatch,
                "object " + ref.key + " does not match checksum " + checksum);
  }
  return content;
}

LocalDirDriver::LocalDirDriver(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) {
    throw Error(Errc::kStorageUnreachable,
                "cannot create " + root_.string() + ": " + ec.message());
  }
}

fs::path LocalDirDriver::object_path(const std::string& key) const {
  if (key.size() < 3 || key.find('/') != std::string::npos) {
    throw Error(Errc::kInvalidArgument, "bad object key " + key);
  }
  return root_ / key.substr(0, 2) / key;
}

StorageRef LocalDirDriver::put(const std::string& content) {
  std::string key = checksum_of(content);
  fs::path path = object_path(key);
  if (!fs::exists(path)) {
    fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      if (!out) throw Error(Errc::kStorageUnreachable, "cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
  }
  return {"local", root_.string(), key};
}

std::string LocalDirDriver::fetch(const StorageRef& ref) {
  std::ifstream in(object_path(ref.key), std::ios::binary);
  if (!in) throw Error(Errc::kNotFound, "object " + ref.key + " not found");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

S3Driver::S3Driver(std::string endpoint, std::string bucket)
    : endpoint_(std::move(endpoint)), bucket_(std::move(bucket)) {}

StorageRef S3Driver::put(const std::string& content) {
  std::string key = checksum_of(content);
  httplib::Client cli(endpoint_);
  auto res = cli.Put("/" + bucket_ + "/" + key, content, "application/octet-stream");
  if (!res) {
    throw Error(Errc::kStorageUnreachable,
                "S3 endpoint " + endpoint_ + " unreachable: " +
                    httplib::to_string(res.error()));
  }
  if (res->status / 100 != 2) {
    throw Error(Errc::kStorageUnreachable,
                "S3 PUT failed with status " + std::to_string(res->status));
  }
  return {"s3", endpoint_ + "/" + bucket_, key};
}

std::string S3Driver::fetch(const StorageRef& ref) {
  httplib::Client cli(endpoint_);
  auto res = cli.Get("/" + bucket_ + "/" + ref.key);
  if (!res) {
    throw Error(Errc::kStorageUnreachable,
                "S3 endpoint " + endpoint_ + " unreachable: " +
                    httplib::to_string(res.error()));
  }
  if (res->status == 404) throw Error(Errc::kNotFound, "object " + ref.key + " not found");
  if (res->status / 100 != 2) {
    throw Error(Errc::kStorageUnreachable,
                "S3 GET failed with status " + std::to_string(res->status));
  }
  return res->body;
}

void Drivers::add(std::shared_ptr<StorageDriver> driver) {
  if (primary_.empty()) primary_ = driver->protocol();
  drivers_[driver->protocol()] = std::move(driver);
}

StorageDriver& Drivers::at(const std::string& protocol) const {
  auto it = drivers_.find(protocol);
  if (it == drivers_.end()) {
    throw Error(Errc::kStorageUnreachable, "no storage driver for " + protocol);
  }
  return *it->second;
}

StorageDriver& Drivers::primary() const {
  if (primary_.empty()) throw Error(Errc::kStorageUnreachable, "no storage driver");
  return at(primary_);
}

}  // namespace colonies::metafs
