#pragma once

// CFS metadata catalog: immutable file revisions and snapshots. Bytes never
// pass through here; they live behind a StorageDriver.

#include <string>
#include <vector>

#include "colonies/core/ids.hpp"
#include "colonies/store/store.hpp"

namespace colonies::metafs {

// Labels are absolute slash-separated paths ("/src/lib"); "/" is the root.
// Throws kInvalidArgument.
std::string normalize_label(std::string_view label);
void check_name(std::string_view name);

// New revision of (label, name); earlier revisions stay untouched. Throws
// kMalformedChecksum unless the checksum is 64 lowercase hex chars.
FileMeta register_file(store::Tx& tx, FileMeta meta, IdSource& ids, Nanos now);

// Hides (label, name) from latest lookups by appending a tombstone revision.
// Snapshots that pinned earlier revisions are unaffected.
FileMeta remove_file(store::Tx& tx, const std::string& colony_id,
                     const std::string& label, const std::string& name,
                     IdSource& ids, Nanos now);

// Pins the latest revision of every live file at or below `label`. Throws
// kUnknownLabel when nothing was ever registered there.
Snapshot create_snapshot(store::Tx& tx, const std::string& colony_id,
                         const std::string& label, IdSource& ids, Nanos now);

Snapshot get_snapshot(store::Tx& tx, const std::string& snapshot_id);

// Replaces "{snapshotid}" placeholders in a spec's snapshot directives with
// freshly pinned snapshots, so queued processes see the files as they were
// at submission.
void pin_snapshots(store::Tx& tx, FunctionSpec& spec, IdSource& ids, Nanos now);

}  // namespace colonies::metafs
