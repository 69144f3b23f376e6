#include <thread>

#include <httplib.h>

#include "mdca/consistency.hpp"
#include "mdca/error.hpp"

namespace mdca {
namespace {

constexpr const char* kPlaceholderPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>MDCA rating</title></head>
<body><h1>MDCA consistency check</h1>
<p>No rater UI assets are installed. The JSON endpoints are available under /sessions/{id}/.</p>
</body></html>
)";

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::kUnknownSession:
        case ErrorCode::kUnknownTask: return 404;
        case ErrorCode::kUnknownRater: return 403;
        case ErrorCode::kDuplicateGrade:
        case ErrorCode::kSessionComplete: return 409;
        case ErrorCode::kInvalidArgument:
        case ErrorCode::kParse: return 400;
        default: return 500;
    }
}

void send_json(httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json; charset=utf-8");
}

template <typename Fn>
void guarded(httplib::Response& res, int ok_status, Fn&& fn) {
    try {
        send_json(res, ok_status, fn());
    } catch (const Error& e) {
        send_json(res, status_for(e.code()), {{"error", to_string(e.code())}, {"message", e.what()}});
    } catch (const std::exception& e) {
        send_json(res, 500, {{"error", "Internal"}, {"message", e.what()}});
    }
}

}  // namespace

struct ConsistencyServer::Impl {
    explicit Impl(SessionService& s) : service(s) {}

    SessionService& service;
    httplib::Server server;
    std::thread thread;
};

ConsistencyServer::ConsistencyServer(SessionService& service, std::optional<std::filesystem::path> ui_dir)
    : impl_(std::make_unique<Impl>(service)) {
    auto& srv = impl_->server;
    auto& svc = impl_->service;

    srv.Get(R"(/sessions/([^/]+)/next-task)", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, 200, [&] {
            if (!req.has_param("rater")) throw Error(ErrorCode::kInvalidArgument, "missing rater parameter");
            return svc.next_task(req.matches[1], req.get_param_value("rater"));
        });
    });
    srv.Post(R"(/sessions/([^/]+)/grades)", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, 201, [&] {
            Json body;
            try {
                body = Json::parse(req.body);
                return svc.submit_grade(req.matches[1], body.at("task_id").get<std::string>(),
                                        body.at("rater_id").get<std::string>(), body.at("tier").get<std::string>());
            } catch (const Json::exception& e) {
                throw Error(ErrorCode::kParse, std::string("grade body: ") + e.what());
            }
        });
    });
    srv.Get(R"(/sessions/([^/]+)/summary)", [&svc](const httplib::Request& req, httplib::Response& res) {
        guarded(res, 200, [&] { return svc.summary(req.matches[1]); });
    });

    if (ui_dir && std::filesystem::is_directory(*ui_dir)) {
        srv.set_mount_point("/", ui_dir->string());
    } else {
        srv.Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(kPlaceholderPage, "text/html; charset=utf-8");
        });
    }
}

ConsistencyServer::~ConsistencyServer() { stop(); }

int ConsistencyServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void ConsistencyServer::run(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) throw Error(ErrorCode::kIo, "cannot listen on " + host + ":" + std::to_string(port));
}

void ConsistencyServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace mdca
