#pragma once

// Executor-side CFS synchronization driven by a spec's "fs" block.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "colonies/metafs/driver.hpp"

namespace colonies::metafs {

// What the executor needs from the catalog; implemented over the API by the
// client and directly over a store in tests.
class Catalog {
 public:
  virtual ~Catalog() = default;
  virtual FileMeta add_file(const FileMeta& meta) = 0;
  virtual FileMeta get_file(const std::string& file_id) = 0;
  // Latest live revision of every file at or below `label`.
  virtual std::vector<FileMeta> list_files(const std::string& colony_id,
                                           const std::string& label) = 0;
  virtual Snapshot create_snapshot(const std::string& colony_id,
                                   const std::string& label) = 0;
  virtual Snapshot get_snapshot(const std::string& snapshot_id) = 0;
  virtual void remove_snapshot(const std::string& snapshot_id) = 0;
};

// Substitutes {processid} and {snapshotid}.
std::string substitute(std::string text, const std::string& process_id,
                       const std::string& snapshot_id);

// Writes every file of the snapshot below `dir`, mirroring labels relative
// to the snapshot's label. Throws kChecksumMismatch and leaves no partial
// file behind.
void materialize(Catalog& catalog, const Drivers& drivers,
                 const Snapshot& snapshot, const std::filesystem::path& dir);

// Relative path -> checksum for every regular file below `dir`.
std::map<std::string, std::string> local_checksums(
    const std::filesystem::path& dir);

// Relative paths to upload. With only_changed, files whose checksum equals
// the remote latest revision are skipped.
std::vector<std::string> plan_upload(
    const std::map<std::string, std::string>& local,
    const std::map<std::string, std::string>& remote, bool only_changed);

struct Workspace {
  std::vector<std::filesystem::path> cleanup;  // dirs to delete after close
  std::vector<std::string> drop_snapshots;     // snapshot records to delete
};

// Materializes each snapshot directive below <root>/<mount>/<dir>.
Workspace sync_before_exec(const FsDirectives& fs, const std::string& process_id,
                           const std::string& colony_id, Catalog& catalog,
                           const Drivers& drivers,
                           const std::filesystem::path& root);

// Uploads the sync dirs as new revisions; returns the registered files.
std::vector<FileMeta> sync_after_exec(const FsDirectives& fs,
                                      const std::string& process_id,
                                      const std::string& colony_id,
                                      Catalog& catalog, const Drivers& drivers,
                                      const std::filesystem::path& root,
                                      Workspace& workspace);

// Deletes local directories and snapshot records per the keep flags.
void finish_workspace(const Workspace& workspace, Catalog& catalog, bool success);

}  // namespace colonies::metafs
