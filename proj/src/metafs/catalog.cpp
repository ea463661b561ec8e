#include "colonies/metafs/catalog.hpp"

#include "colonies/crypto/encoding.hpp"

namespace colonies::metafs {
namespace {

constexpr const char* kSnapshotPlaceholder = "{snapshotid}";

}  // namespace

std::string normalize_label(std::string_view label) {
  if (label.empty() || label.front() != '/') {
    throw Error(Errc::kInvalidArgument,
                "label must be an absolute path: " + std::string(label));
  }
  std::string out;
  std::size_t i = 1;
  while (i <= label.size()) {
    auto next = label.find('/', i);
    if (next == std::string_view::npos) next = label.size();
    auto seg = label.substr(i, next - i);
    if (seg == "." || seg == "..") {
      throw Error(Errc::kInvalidArgument, "label may not contain . or ..");
    }
    if (!seg.empty()) {
      out += '/';
      out += seg;
    }
    i = next + 1;
  }
  return out.empty() ? "/" : out;
}

void check_name(std::string_view name) {
  if (name.empty() || name == "." || name == ".." ||
      name.find('/') != std::string_view::npos) {
    throw Error(Errc::kInvalidArgument, "bad file name: " + std::string(name));
  }
}

FileMeta register_file(store::Tx& tx, FileMeta meta, IdSource& ids, Nanos now) {
  if (!crypto::is_lower_hex(meta.checksum, 64)) {
    throw Error(Errc::kMalformedChecksum,
                "checksum must be 64 lowercase hex characters");
  }
  if (meta.size < 0) throw Error(Errc::kInvalidArgument, "negative file size");
  meta.label = normalize_label(meta.label);
  check_name(meta.name);
  if (!tx.find_colony(meta.colony_id)) {
    throw Error(Errc::kNotFound, "colony " + meta.colony_id + " not found");
  }
  auto latest = tx.latest_file(meta.colony_id, meta.label, meta.name);
  meta.revision = latest ? latest->revision + 1 : 1;
  meta.file_id = ids.next();
  meta.added = now;
  meta.tombstone = false;
  tx.insert_file(meta);
  return meta;
}

FileMeta remove_file(store::Tx& tx, const std::string& colony_id,
                     const std::string& label, const std::string& name,
                     IdSource& ids, Nanos now) {
  std::string l = normalize_label(label);
  auto latest = tx.latest_file(colony_id, l, name);
  if (!latest || latest->tombstone) {
    throw Error(Errc::kNotFound, "no file " + l + "/" + name);
  }
  FileMeta t = *latest;
  t.file_id = ids.next();
  t.revision = latest->revision + 1;
  t.added = now;
  t.tombstone = true;
  tx.insert_file(t);
  return t;
}

Snapshot create_snapshot(store::Tx& tx, const std::string& colony_id,
                         const std::string& label, IdSource& ids, Nanos now) {
  std::string l = normalize_label(label);
  if (!tx.label_exists(colony_id, l)) {
    throw Error(Errc::kUnknownLabel, "label " + l + " does not exist");
  }
  Snapshot s;
  s.snapshot_id = ids.next();
  s.colony_id = colony_id;
  s.label = l;
  s.created = now;
  for (const auto& f : tx.files_under(colony_id, l)) {
    s.files.push_back({f.file_id, f.revision, f.label, f.name});
  }
  tx.insert_snapshot(s);
  return s;
}

Snapshot get_snapshot(store::Tx& tx, const std::string& snapshot_id) {
  auto s = tx.find_snapshot(snapshot_id);
  if (!s) throw Error(Errc::kUnknownSnapshot, "snapshot " + snapshot_id + " not found");
  return *s;
}

void pin_snapshots(store::Tx& tx, FunctionSpec& spec, IdSource& ids, Nanos now) {
  if (!spec.fs) return;
  for (auto& d : spec.fs->snapshots) {
    if (d.snapshot_id.empty() || d.snapshot_id == kSnapshotPlaceholder) {
      d.snapshot_id =
          create_snapshot(tx, spec.conditions.colony_id, d.label, ids, now)
              .snapshot_id;
    } else {
      auto s = get_snapshot(tx, d.snapshot_id);
      if (s.colony_id != spec.conditions.colony_id) {
        throw Error(Errc::kUnknownSnapshot,
                    "snapshot " + d.snapshot_id + " not found");
      }
    }
  }
}

}  // namespace colonies::metafs
