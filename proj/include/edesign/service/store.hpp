#pragma once

#include <sqlite3.h>

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "edesign/core/errors.hpp"

namespace edesign::service {

class StoreError : public Error {
 public:
  using Error::Error;
};

/// Single-file SQLite store: designs keyed by content hash, sessions, an
/// append-only event log per session, and periodic session snapshots.
class Store {
 public:
  struct DesignRecord {
    std::string id;
    std::string request;  ///< canonical request JSON
    std::string summary;  ///< solve summary JSON
    std::string policy_csv;
    std::string policy_json;
  };

  struct EventRecord {
    long long seq = 0;
    std::string payload;  ///< event JSON
  };

  struct SnapshotRecord {
    long long seq = 0;
    std::string state;
  };

  /// Opens (creating if needed) the database at `path`; ":memory:" keeps it in RAM.
  explicit Store(const std::string& path) {
    if (sqlite3_open(path.c_str(), &db_) != SQLITE_OK) {
      const std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
      sqlite3_close(db_);
      throw StoreError("cannot open store '" + path + "': " + msg);
    }
    exec("PRAGMA journal_mode=WAL");
    exec("PRAGMA synchronous=FULL");
    exec("PRAGMA foreign_keys=ON");
    exec(
        "CREATE TABLE IF NOT EXISTS designs ("
        " id TEXT PRIMARY KEY, request TEXT NOT NULL, summary TEXT NOT NULL,"
        " policy_csv BLOB NOT NULL, policy_json TEXT NOT NULL)");
    exec(
        "CREATE TABLE IF NOT EXISTS sessions ("
        " id TEXT PRIMARY KEY, design_id TEXT NOT NULL REFERENCES designs(id), created TEXT NOT NULL)");
    exec(
        "CREATE TABLE IF NOT EXISTS events ("
        " session_id TEXT NOT NULL REFERENCES sessions(id), seq INTEGER NOT NULL, payload TEXT NOT NULL,"
        " PRIMARY KEY (session_id, seq))");
    exec(
        "CREATE TABLE IF NOT EXISTS snapshots ("
        " session_id TEXT PRIMARY KEY REFERENCES sessions(id), seq INTEGER NOT NULL, state TEXT NOT NULL)");
  }

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;
  ~Store() { sqlite3_close(db_); }

  /// Inserts the design unless one with the same id exists. Returns true if inserted.
  bool put_design(const DesignRecord& d) {
    std::lock_guard lock(mutex_);
    Statement st(db_,
                 "INSERT OR IGNORE INTO designs (id, request, summary, policy_csv, policy_json) VALUES (?,?,?,?,?)");
    st.bind(1, d.id).bind(2, d.request).bind(3, d.summary).bind_blob(4, d.policy_csv).bind(5, d.policy_json);
    st.done();
    return sqlite3_changes(db_) > 0;
  }

  std::optional<DesignRecord> get_design(const std::string& id) const {
    std::lock_guard lock(mutex_);
    Statement st(db_, "SELECT id, request, summary, policy_csv, policy_json FROM designs WHERE id = ?");
    st.bind(1, id);
    if (!st.step()) return std::nullopt;
    return DesignRecord{st.text(0), st.text(1), st.text(2), st.text(3), st.text(4)};
  }

  void put_session(const std::string& id, const std::string& design_id, const std::string& created) {
    std::lock_guard lock(mutex_);
    Statement st(db_, "INSERT INTO sessions (id, design_id, created) VALUES (?,?,?)");
    st.bind(1, id).bind(2, design_id).bind(3, created);
    st.done();
  }

  /// design id and creation stamp of a session.
  std::optional<std::pair<std::string, std::string>> get_session(const std::string& id) const {
    std::lock_guard lock(mutex_);
    Statement st(db_, "SELECT design_id, created FROM sessions WHERE id = ?");
    st.bind(1, id);
    if (!st.step()) return std::nullopt;
    return std::pair{st.text(0), st.text(1)};
  }

  long long session_count() const {
    std::lock_guard lock(mutex_);
    Statement st(db_, "SELECT COUNT(*) FROM sessions");
    st.step();
    return sqlite3_column_int64(st.get(), 0);
  }

  /// Appends event `seq` and, if given, replaces the session snapshot, in one
  /// durable transaction. Sequence numbers must be contiguous from 1.
  void append_event(const std::string& session_id, long long seq, const std::string& payload,
                    const std::optional<std::string>& snapshot = std::nullopt) {
    std::lock_guard lock(mutex_);
    exec("BEGIN IMMEDIATE");
    try {
      {
        Statement st(db_, "SELECT COALESCE(MAX(seq), 0) FROM events WHERE session_id = ?");
        st.bind(1, session_id);
        st.step();
        const long long last = sqlite3_column_int64(st.get(), 0);
        if (seq != last + 1)
          throw StoreError("event sequence gap: expected " + std::to_string(last + 1) + ", got " +
                           std::to_string(seq));
      }
      {
        Statement st(db_, "INSERT INTO events (session_id, seq, payload) VALUES (?,?,?)");
        st.bind(1, session_id).bind(2, seq).bind(3, payload);
        st.done();
      }
      if (snapshot) {
        Statement st(db_, "INSERT OR REPLACE INTO snapshots (session_id, seq, state) VALUES (?,?,?)");
        st.bind(1, session_id).bind(2, seq).bind(3, *snapshot);
        st.done();
      }
      exec("COMMIT");
    } catch (...) {
      exec("ROLLBACK");
      throw;
    }
  }

  std::vector<EventRecord> events(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    Statement st(db_, "SELECT seq, payload FROM events WHERE session_id = ? ORDER BY seq");
    st.bind(1, session_id);
    std::vector<EventRecord> out;
    while (st.step()) out.push_back({sqlite3_column_int64(st.get(), 0), st.text(1)});
    return out;
  }

  std::optional<SnapshotRecord> snapshot(const std::string& session_id) const {
    std::lock_guard lock(mutex_);
    Statement st(db_, "SELECT seq, state FROM snapshots WHERE session_id = ?");
    st.bind(1, session_id);
    if (!st.step()) return std::nullopt;
    return SnapshotRecord{sqlite3_column_int64(st.get(), 0), st.text(1)};
  }

 private:
  class Statement {
   public:
    Statement(sqlite3* db, const char* sql) : db_(db) {
      if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
        throw StoreError(std::string("prepare failed: ") + sqlite3_errmsg(db));
    }
    Statement(const Statement&) = delete;
    Statement& operator=(const Statement&) = delete;
    ~Statement() { sqlite3_finalize(stmt_); }

    Statement& bind(int i, const std::string& v) {
      check(sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT));
      return *this;
    }
    Statement& bind(int i, long long v) {
      check(sqlite3_bind_int64(stmt_, i, v));
      return *this;
    }
    Statement& bind_blob(int i, const std::string& v) {
      check(sqlite3_bind_blob64(stmt_, i, v.data(), v.size(), SQLITE_TRANSIENT));
      return *this;
    }

    bool step() {
      const int rc = sqlite3_step(stmt_);
      if (rc == SQLITE_ROW) return true;
      if (rc == SQLITE_DONE) return false;
      throw StoreError(std::string("step failed: ") + sqlite3_errmsg(db_));
    }
    void done() {
      if (step()) throw StoreError("statement unexpectedly returned rows");
    }

    std::string text(int col) const {
      const void* p = sqlite3_column_blob(stmt_, col);
      const int n = sqlite3_column_bytes(stmt_, col);
      return p ? std::string(static_cast<const char*>(p), static_cast<std::size_t>(n)) : std::string();
    }
    sqlite3_stmt* get() const { return stmt_; }

   private:
    void check(int rc) {
      if (rc != SQLITE_OK) throw StoreError(std::string("bind failed: ") + sqlite3_errmsg(db_));
    }
    sqlite3* db_;
    sqlite3_stmt* stmt_ = nullptr;
  };

  void exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      const std::string msg = err ? err : "unknown error";
      sqlite3_free(err);
      throw StoreError(std::string("sql failed (") + sql + "): " + msg);
    }
  }

  sqlite3* db_ = nullptr;
  mutable std::recursive_mutex mutex_;
};

}  // namespace edesign::service
