#include "colonies/metafs/sync.hpp"

#include <fstream>
#include <sstream>

#include "colonies/core/error.hpp"
#include "colonies/metafs/catalog.hpp"

namespace colonies::metafs {
namespace fs = std::filesystem;
namespace {

void replace_all(std::string& s, std::string_view from, const std::string& to) {
  for (auto pos = s.find(from); pos != std::string::npos;
       pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
}

// "/cfs" below root -> root/cfs. Rejects paths escaping the root.
fs::path under(const fs::path& root, std::string_view p) {
  fs::path rel = fs::path(p).relative_path().lexically_normal();
  for (const auto& part : rel) {
    if (part == "..") throw Error(Errc::kInvalidArgument, "path escapes workdir");
  }
  return root / rel;
}

// "/src/a" relative to "/src" -> "a"; "/src" -> "".
std::string relative_label(const std::string& label, const std::string& base) {
  if (base == "/") return label.substr(1);
  if (label == base) return {};
  return label.substr(base.size() + 1);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::kNotFound, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  fs::create_directories(p.parent_path());
  fs::path tmp = p;
  tmp += ".part";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(Errc::kStorageFailure, "cannot write " + p.string());
  }
  fs::rename(tmp, p);
}

}  // namespace

std::string substitute(std::string text, const std::string& process_id,
                       const std::string& snapshot_id) {
  replace_all(text, "{processid}", process_id);
  if (!snapshot_id.empty()) replace_all(text, "{snapshotid}", snapshot_id);
  return text;
}

void materialize(Catalog& catalog, const Drivers& drivers,
                 const Snapshot& snapshot, const fs::path& dir) {
  std::vector<std::pair<fs::path, std::string>> staged;
  for (const auto& entry : snapshot.files) {
    FileMeta meta = catalog.get_file(entry.file_id);
    std::string content =
        drivers.at(meta.storage.protocol).get(meta.storage, meta.checksum);
    fs::path target = dir / relative_label(entry.label, snapshot.label) / entry.name;
    staged.emplace_back(target.lexically_normal(), std::move(content));
  }
  fs::create_directories(dir);
  for (const auto& [path, content] : staged) write_file(path, content);
}

std::map<std::string, std::string> local_checksums(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    out[fs::relative(e.path(), dir).generic_string()] =
        checksum_of(read_file(e.path()));
  }
  return out;
}

std::vector<std::string> plan_upload(
    const std::map<std::string, std::string>& local,
    const std::map<std::string, std::string>& remote, bool only_changed) {
  std::vector<std::string> out;
  for (const auto& [path, sum] : local) {
    if (only_changed) {
      auto it = remote.find(path);
      if (it != remote.end() && it->second == sum) continue;
    }
    out.push_back(path);
  }
  return out;
}

Workspace sync_before_exec(const FsDirectives& fsd, const std::string& process_id,
                           const std::string& colony_id, Catalog& catalog,
                           const Drivers& drivers, const fs::path& root) {
  Workspace ws;
  fs::path mount = under(root, fsd.mount);
  for (const auto& d : fsd.snapshots) {
    std::string sid = substitute(d.snapshot_id, process_id, {});
    Snapshot snap;
    if (sid.empty() || sid == "{snapshotid}") {
      snap = catalog.create_snapshot(colony_id, d.label);
    } else {
      snap = catalog.get_snapshot(sid);
    }
    fs::path dir = under(mount, substitute(d.dir, process_id, snap.snapshot_id));
    materialize(catalog, drivers, snap, dir);
    if (!d.keep_files) ws.cleanup.push_back(dir);
    if (!d.keep_snapshot) ws.drop_snapshots.push_back(snap.snapshot_id);
  }
  return ws;
}

std::vector<FileMeta> sync_after_exec(const FsDirectives& fsd,
                                      const std::string& process_id,
                                      const std::string& colony_id,
                                      Catalog& catalog, const Drivers& drivers,
                                      const fs::path& root, Workspace& ws) {
  std::vector<FileMeta> out;
  fs::path mount = under(root, fsd.mount);
  for (const auto& d : fsd.dirs) {
    fs::path dir = under(mount, substitute(d.dir, process_id, {}));
    std::string label = normalize_label(substitute(d.label, process_id, {}));
    std::map<std::string, std::string> remote;
    for (const auto& f : catalog.list_files(colony_id, label)) {
      std::string rel = relative_label(f.label, label);
      remote[rel.empty() ? f.name : rel + "/" + f.name] = f.checksum;
    }
    auto local = local_checksums(dir);
    for (const auto& rel : plan_upload(local, remote, d.only_changed)) {
      fs::path p(rel);
      std::string sub = p.parent_path().generic_string();
      FileMeta meta;
      meta.colony_id = colony_id;
      meta.label = sub.empty() ? label : normalize_label(label + "/" + sub);
      meta.name = p.filename().string();
      std::string content = read_file(dir / p);
      meta.checksum = checksum_of(content);
      meta.size = static_cast<std::int64_t>(content.size());
      meta.storage = drivers.primary().put(content);
      out.push_back(catalog.add_file(meta));
    }
    if (!d.keep_files) ws.cleanup.push_back(dir);
  }
  return out;
}

void finish_workspace(const Workspace& ws, Catalog& catalog, bool success) {
  for (const auto& dir : ws.cleanup) {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  if (!success) return;
  for (const auto& sid : ws.drop_snapshots) {
    try {
      catalog.remove_snapshot(sid);
    } catch (const Error&) {
      // Already gone.
    }
  }
}

}  // namespace colonies::metafs
