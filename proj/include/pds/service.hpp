#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <mutex>
#include <random>
#include <string>
#include <unordered_map>

#include <httplib.h>

#include "pds/customizer.hpp"
#include "pds/errors.hpp"
#include "pds/layer.hpp"

namespace pds {

inline int http_status_for(Errc c) {
  switch (c) {
    case Errc::unknown_user:
    case Errc::unknown_measure:
    case Errc::unknown_role:
    case Errc::unknown_table:
    case Errc::unknown_report:
    case Errc::unknown_column:
    case Errc::stale_table_version:
      return 404;
    case Errc::access_denied:
    case Errc::identifier_forbidden:
    case Errc::not_administrator:
    case Errc::inactive_user:
      return 403;
    case Errc::parse_error:
      return 400;
    case Errc::validation_failed:
    case Errc::type_error:
    case Errc::header_mismatch:
    case Errc::duplicate_column:
    case Errc::invalid_value:
    case Errc::invalid_spec:
    case Errc::snap_on_exact_spec:
    case Errc::no_nonzero_width:
      return 422;
    case Errc::io_error:
      return 500;
  }
  return 500;
}

// A submitted report: the recipe and who submitted it, never the result rows.
struct StoredReport {
  std::string report_id;
  std::string user_id;
  QueryDescriptor descriptor;
  int64_t table_version = 0;
};

// Fixed-capacity LRU of descriptors. Evicted reports 404 afterwards.
class ReportRegistry {
 public:
  explicit ReportRegistry(std::size_t capacity) : capacity_(capacity ? capacity : 1) {}

  std::string put(StoredReport report) {
    std::lock_guard lock(mx_);
    std::string id;
    do {
      id = random_id();
    } while (index_.count(id));
    report.report_id = id;
    lru_.push_front(std::move(report));
    index_[id] = lru_.begin();
    if (lru_.size() > capacity_) {
      index_.erase(lru_.back().report_id);
      lru_.pop_back();
    }
    return id;
  }

  StoredReport get(const std::string& id) {
    std::lock_guard lock(mx_);
    auto it = index_.find(id);
    if (it == index_.end())
      throw Error(Errc::unknown_report, "unknown report: '" + id + "'");
    lru_.splice(lru_.begin(), lru_, it->second);  // touch
    return *it->second;
  }

  std::size_t size() const {
    std::lock_guard lock(mx_);
    return lru_.size();
  }

 private:
  std::string random_id() {
    static const char* digits = "0123456789abcdef";
    std::string id(16, '0');
    uint64_t r = rng_();
    for (char& c : id) {
      c = digits[r & 0xf];
      r >>= 4;
      if (r == 0) r = rng_();
    }
    return id;
  }

  mutable std::mutex mx_;
  std::size_t capacity_;
  std::list<StoredReport> lru_;
  std::unordered_map<std::string, std::list<StoredReport>::iterator> index_;
  std::mt19937_64 rng_{std::random_device{}()};
};

// HTTP+JSON facade. Bearer tokens map to portfolio users via api_key_digest,
// or to the administrator via the configured admin key digest.
class Service {
 public:
  Service(PrivacyLayer& layer, std::string admin_key_digest, std::size_t report_capacity)
      : layer_(layer),
        admin_key_digest_(std::move(admin_key_digest)),
        registry_(report_capacity) {
    route();
  }

  httplib::Server& server() { return server_; }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }

 private:
  struct Unauthorized {};

  Identity identify(const httplib::Request& req) {
    std::string header = req.get_header_value("Authorization");
    const std::string prefix = "Bearer ";
    if (header.rfind(prefix, 0) != 0) throw Unauthorized{};
    std::string token = header.substr(prefix.size());
    std::string digest = crypto::sha256_hex(token);
    if (!admin_key_digest_.empty() && digest == admin_key_digest_) return Identity::admin();
    if (auto user = layer_.rules().user_for_api_digest(digest)) return Identity::user(*user);
    throw Unauthorized{};
  }

  static void reply_json(httplib::Response& res, int status, const std::string& body) {
    res.status = status;
    res.set_content(body, "application/json");
  }

  static void reply_error(httplib::Response& res, const Error& e) {
    ordered_json j;
    j["error"] = errc_name(e.code());
    j["message"] = e.what();
    if (const auto* v = dynamic_cast<const ValidationError*>(&e))
      j["violations"] = v->violations();
    reply_json(res, http_status_for(e.code()), j.dump());
  }

  template <typename Fn>
  void handle(const httplib::Request& req, httplib::Response& res, Fn&& fn) {
    res.set_header("X-Request-Id", std::to_string(++request_counter_));
    try {
      Identity caller = identify(req);
      fn(caller);
    } catch (const Unauthorized&) {
      reply_json(res, 401, R"({"error":"unauthorized","message":"unknown bearer token"})");
    } catch (const Error& e) {
      reply_error(res, e);
    } catch (const std::exception& e) {
      ordered_json j{{"error", "internal"}, {"message", e.what()}};
      reply_json(res, 500, j.dump());
    }
  }

  static const std::string& require_user(const Identity& caller) {
    if (caller.is_admin)
      throw Error(Errc::access_denied, "query endpoints require a portfolio user token");
    return caller.user_id;
  }

  void require_admin(const Identity& caller) {
    if (!caller.is_admin)
      throw Error(Errc::not_administrator, "administrator credential required");
  }

  // Rebuilds the minimal report context redistribute/refresh need.
  PersonalizedDataSet report_skeleton(const StoredReport& r) {
    PersonalizedDataSet pds;
    pds.descriptor = r.descriptor;
    pds.table_version = r.table_version;
    pds.resolved.measure_id = r.descriptor.measure_id;
    pds.resolved.resolved_for = r.user_id;
    return pds;
  }

  void route() {
    server_.Post("/v1/query", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](const Identity& caller) {
        const std::string& user = require_user(caller);
        QueryDescriptor q = descriptor_from_json(parse_json(req.body, "query body"));
        PersonalizedDataSet pds = layer_.run_query(user, q);
        std::string id = registry_.put({{}, user, pds.descriptor, pds.table_version});
        res.set_header("X-Report-Id", id);
        reply_json(res, 200, pds_to_canonical_json(pds));
      });
    });

    server_.Post(R"(/v1/reports/([0-9a-f]+)/redistribute)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle(req, res, [&](const Identity& caller) {
                     const std::string& viewer = require_user(caller);
                     StoredReport r = registry_.get(req.matches[1]);
                     PersonalizedDataSet out =
                         layer_.redistribute_report(report_skeleton(r), viewer);
                     reply_json(res, 200, pds_to_canonical_json(out));
                   });
                 });

    server_.Post(R"(/v1/reports/([0-9a-f]+)/refresh)",
                 [this](const httplib::Request& req, httplib::Response& res) {
                   handle(req, res, [&](const Identity& caller) {
                     const std::string& user = require_user(caller);
                     StoredReport r = registry_.get(req.matches[1]);
                     PersonalizedDataSet out = layer_.refresh_report(report_skeleton(r), user);
                     reply_json(res, 200, pds_to_canonical_json(out));
                   });
                 });

    server_.Put(R"(/v1/admin/policies/([^/]+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  handle(req, res, [&](const Identity& caller) {
                    require_admin(caller);
                    json body = parse_json(req.body, "policy body");
                    MeasurePolicy p = measure_policy_from_json(body, layer_.rules().salt());
                    if (p.measure_id != std::string(req.matches[1]))
                      throw ValidationError({"measure_id in body does not match the path"});
                    layer_.rules().upsert_policy(caller, std::move(p));
                    reply_json(res, 200, R"({"status":"ok"})");
                  });
                });

    server_.Post("/v1/admin/users", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](const Identity& caller) {
        require_admin(caller);
        UserProfile u = user_from_json(parse_json(req.body, "user body"));
        layer_.rules().upsert_user(caller, u);
        reply_json(res, 200, R"({"status":"ok"})");
      });
    });

    server_.Put(R"(/v1/admin/users/([^/]+)/role)",
                [this](const httplib::Request& req, httplib::Response& res) {
                  handle(req, res, [&](const Identity& caller) {
                    require_admin(caller);
                    json body = parse_json(req.body, "role body");
                    layer_.rules().set_role(caller, req.matches[1],
                                            body.at("role_id").get<std::string>());
                    reply_json(res, 200, R"({"status":"ok"})");
                  });
                });

    server_.Get("/v1/admin/audit", [this](const httplib::Request& req, httplib::Response& res) {
      handle(req, res, [&](const Identity& caller) {
        AuditFilter filter;
        if (req.has_param("user_id")) filter.user_id = req.get_param_value("user_id");
        if (req.has_param("since")) filter.since = req.get_param_value("since");
        if (req.has_param("outcome"))
          filter.outcome = parse_audit_outcome(req.get_param_value("outcome"));
        auto entries = layer_.rules().list_audit(caller, filter);
        ordered_json arr = ordered_json::array();
        for (const auto& e : entries) arr.push_back(e.to_json());
        reply_json(res, 200, ordered_json{{"entries", arr}}.dump());
      });
    });
  }

  PrivacyLayer& layer_;
  std::string admin_key_digest_;
  ReportRegistry registry_;
  httplib::Server server_;
  std::atomic<uint64_t> request_counter_{0};
};

}  // namespace pds
