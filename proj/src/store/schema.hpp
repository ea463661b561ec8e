#pragma once

#include <array>
#include <string_view>

namespace colonies::store {

// Forward-only migrations; index i upgrades schema version i to i + 1.
inline constexpr std::array<std::string_view, 1> kMigrations = {R"sql(
CREATE TABLE processes (
  process_id        TEXT PRIMARY KEY,
  colony_id         TEXT NOT NULL,
  executor_type     TEXT NOT NULL,
  func_name         TEXT NOT NULL,
  executor_names    TEXT NOT NULL,
  state             INTEGER NOT NULL,
  wait_for_parents  INTEGER NOT NULL,
  assigned_executor TEXT NOT NULL,
  submission_time   INTEGER NOT NULL,
  priority_time     INTEGER NOT NULL,
  queued_time       INTEGER NOT NULL,
  start_time        INTEGER NOT NULL,
  end_time          INTEGER NOT NULL,
  deadline          INTEGER NOT NULL,
  retries           INTEGER NOT NULL,
  max_retries       INTEGER NOT NULL,
  max_wait_time     INTEGER NOT NULL,
  spec              TEXT NOT NULL,
  errors            TEXT NOT NULL,
  parents           TEXT NOT NULL,
  children          TEXT NOT NULL,
  workflow_id       TEXT NOT NULL
);
CREATE INDEX processes_queue ON processes
  (colony_id, executor_type, state, wait_for_parents, priority_time);
CREATE INDEX processes_deadline ON processes (state, deadline);

CREATE TABLE io (
  process_id TEXT PRIMARY KEY,
  input      TEXT NOT NULL,
  output     TEXT NOT NULL
);

CREATE TABLE dependencies (
  process_id   TEXT PRIMARY KEY,
  workflow_id  TEXT NOT NULL,
  node_name    TEXT NOT NULL,
  dependencies TEXT NOT NULL
);

CREATE TABLE workflows (
  workflow_id     TEXT PRIMARY KEY,
  colony_id       TEXT NOT NULL,
  submission_time INTEGER NOT NULL,
  source          TEXT NOT NULL
);

CREATE TABLE colonies (
  colony_id TEXT PRIMARY KEY,
  name      TEXT NOT NULL
);

CREATE TABLE executors (
  executor_id   TEXT PRIMARY KEY,
  colony_id     TEXT NOT NULL,
  executor_name TEXT NOT NULL,
  executor_type TEXT NOT NULL,
  approved      INTEGER NOT NULL,
  functions     TEXT NOT NULL,
  last_seen     INTEGER NOT NULL,
  UNIQUE (colony_id, executor_name)
);

CREATE TABLE crons (
  cron_id       TEXT PRIMARY KEY,
  colony_id     TEXT NOT NULL,
  name          TEXT NOT NULL,
  interval      INTEGER NOT NULL,
  cron_expr     TEXT NOT NULL,
  workflow      TEXT NOT NULL,
  next_deadline INTEGER NOT NULL,
  last_run      INTEGER NOT NULL
);

CREATE TABLE generators (
  generator_id  TEXT PRIMARY KEY,
  colony_id     TEXT NOT NULL,
  name          TEXT NOT NULL,
  workflow      TEXT NOT NULL,
  trigger_count INTEGER NOT NULL,
  timeout       INTEGER NOT NULL
);

CREATE TABLE packs (
  seq          INTEGER PRIMARY KEY AUTOINCREMENT,
  generator_id TEXT NOT NULL,
  payload      TEXT NOT NULL,
  arrival      INTEGER NOT NULL,
  consumed     INTEGER NOT NULL,
  workflow_id  TEXT NOT NULL
);
CREATE INDEX packs_pending ON packs (generator_id, consumed, seq);

CREATE TABLE files (
  file_id     TEXT PRIMARY KEY,
  colony_id   TEXT NOT NULL,
  label       TEXT NOT NULL,
  name        TEXT NOT NULL,
  revision    INTEGER NOT NULL,
  checksum    TEXT NOT NULL,
  size        INTEGER NOT NULL,
  protocol    TEXT NOT NULL,
  server      TEXT NOT NULL,
  object_key  TEXT NOT NULL,
  credentials TEXT NOT NULL,
  added       INTEGER NOT NULL,
  tombstone   INTEGER NOT NULL,
  UNIQUE (colony_id, label, name, revision)
);
CREATE TRIGGER files_no_update BEFORE UPDATE ON files
BEGIN SELECT RAISE(ABORT, 'file metadata is immutable'); END;
CREATE TRIGGER files_no_delete BEFORE DELETE ON files
BEGIN SELECT RAISE(ABORT, 'file metadata is immutable'); END;

CREATE TABLE snapshots (
  snapshot_id TEXT PRIMARY KEY,
  colony_id   TEXT NOT NULL,
  label       TEXT NOT NULL,
  created     INTEGER NOT NULL
);
CREATE TRIGGER snapshots_no_update BEFORE UPDATE ON snapshots
BEGIN SELECT RAISE(ABORT, 'snapshots are immutable'); END;

CREATE TABLE snapshot_files (
  snapshot_id TEXT NOT NULL,
  position    INTEGER NOT NULL,
  file_id     TEXT NOT NULL,
  revision    INTEGER NOT NULL,
  label       TEXT NOT NULL,
  name        TEXT NOT NULL,
  PRIMARY KEY (snapshot_id, position)
);
CREATE TRIGGER snapshot_files_no_update BEFORE UPDATE ON snapshot_files
BEGIN SELECT RAISE(ABORT, 'snapshots are immutable'); END;

CREATE TABLE audit (
  seq         INTEGER PRIMARY KEY AUTOINCREMENT,
  time        INTEGER NOT NULL,
  process_id  TEXT NOT NULL,
  action      TEXT NOT NULL,
  state       INTEGER NOT NULL,
  executor_id TEXT NOT NULL,
  term        INTEGER NOT NULL,
  reason      TEXT NOT NULL,
  retries     INTEGER NOT NULL
);
CREATE INDEX audit_process ON audit (process_id, seq);

CREATE TABLE fence (
  id   INTEGER PRIMARY KEY CHECK (id = 1),
  term INTEGER NOT NULL
);
INSERT INTO fence (id, term) VALUES (1, 0);
)sql"};

// Dump order and primary keys.
struct TableInfo {
  std::string_view name;
  std::string_view order_by;
};

inline constexpr std::array<TableInfo, 14> kTables = {{
    {"colonies", "colony_id"},
    {"executors", "executor_id"},
    {"processes", "process_id"},
    {"io", "process_id"},
    {"dependencies", "process_id"},
    {"workflows", "workflow_id"},
    {"crons", "cron_id"},
    {"generators", "generator_id"},
    {"packs", "seq"},
    {"files", "file_id"},
    {"snapshots", "snapshot_id"},
    {"snapshot_files", "snapshot_id, position"},
    {"audit", "seq"},
    {"fence", "id"},
}};

}  // namespace colonies::store
