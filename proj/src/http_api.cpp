#include "clcoach/http_api.hpp"

#include "httplib.h"

#include "clcoach/error.hpp"

namespace clcoach {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view kind, const std::string& message) {
    send_json(res, status, {{"error", kind}, {"message", message}});
}

template <class F>
httplib::Server::Handler guarded(F&& f) {
    return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const UnknownSessionError& e) {
            send_error(res, 404, "unknown_session", e.what());
        } catch (const SessionClosedError& e) {
            send_error(res, 410, "closed", e.what());
        } catch (const ProtocolError& e) {
            send_error(res, 409, "protocol", e.what());
        } catch (const NotAvailableError& e) {
            send_error(res, 409, "not_available", e.what());
        } catch (const ParameterError& e) {
            send_error(res, 400, "bad_request", e.what());
        } catch (const DataError& e) {
            send_error(res, 400, "data", e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, "bad_request", e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "internal", e.what());
        }
    };
}

json parse_body(const httplib::Request& req) {
    try {
        return json::parse(req.body);
    } catch (const json::parse_error& e) {
        throw ParameterError(std::string("request body is not JSON: ") + e.what());
    }
}

std::size_t parse_index(const std::string& text, const char* what) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        v = std::stoull(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) throw ParameterError(std::string("invalid ") + what + " '" + text + "'");
    return static_cast<std::size_t>(v);
}

json events_json(const std::vector<RobotEvent>& events) {
    json out = json::array();
    for (const auto& e : events) out.push_back(robot_event_json(e));
    return out;
}

json frame_json(const FrameAck& ack) {
    return {{"annotation", affect_json(ack.annotation)},
            {"quadrant", std::string(to_string(classify_quadrant(ack.annotation)))},
            {"buffered", ack.buffered},
            {"buffered_frames", ack.buffered_frames}};
}

}  // namespace

void register_routes(httplib::Server& server, SessionService& service) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type, Last-Event-ID"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
                   send_json(res, 200, {{"status", "ok"}});
               }));

    server.Get("/sessions", guarded([&service](const httplib::Request&, httplib::Response& res) {
                   json out = json::array();
                   for (const auto& s : service.list()) out.push_back(s.to_json());
                   send_json(res, 200, {{"sessions", out}});
               }));

    server.Post("/sessions", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                    const auto body = parse_body(req);
                    const auto condition = condition_from_string(body.at("condition").get<std::string>());
                    const auto person = body.at("person").get<std::string>();
                    std::optional<std::uint64_t> seed;
                    if (body.contains("seed")) seed = body.at("seed").get<std::uint64_t>();
                    const auto created = service.create_session(condition, person, seed);
                    send_json(res, 201, {{"session", created.session.to_json()}, {"events", events_json(created.events)}});
                }));

    server.Get(R"(/sessions/([A-Za-z0-9_-]+))", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, 200, service.info(req.matches[1]).to_json());
               }));

    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/events)",
                guarded([&service](const httplib::Request& req, httplib::Response& res) {
                    const auto event = service_event_from_json(parse_body(req));
                    const auto result = service.post_event(req.matches[1], event);
                    json out = {{"events", events_json(result.events)}, {"session", result.session.to_json()}};
                    if (result.last_frame) {
                        out["frame"] = frame_json(*result.last_frame);
                        out["frames_accepted"] = result.frames_accepted;
                    }
                    send_json(res, 200, out);
                }));

    server.Get(R"(/sessions/([A-Za-z0-9_-]+)/snapshot)",
               guarded([&service](const httplib::Request& req, httplib::Response& res) {
                   send_json(res, 200, service.memory_snapshot(req.matches[1]).to_json());
               }));

    server.Get(R"(/sessions/([A-Za-z0-9_-]+)/log)", guarded([&service](const httplib::Request& req, httplib::Response& res) {
                   res.set_content(service.log_text(req.matches[1]), "application/x-ndjson");
               }));

    server.Post(R"(/sessions/([A-Za-z0-9_-]+)/close)",
                guarded([&service](const httplib::Request& req, httplib::Response& res) {
                    const auto files = service.close(req.matches[1]);
                    send_json(res, 200, {{"log", files.log.string()},
                                         {"model", files.model ? json(files.model->string()) : json(nullptr)}});
                }));

    server.Get(R"(/sessions/([A-Za-z0-9_-]+)/stream)",
               guarded([&service](const httplib::Request& req, httplib::Response& res) {
                   const std::string id = req.matches[1];
                   service.info(id);  // 404 before committing to a stream
                   std::size_t from = 0;
                   if (req.has_header("Last-Event-ID")) {
                       from = parse_index(req.get_header_value("Last-Event-ID"), "Last-Event-ID") + 1;
                   } else if (req.has_param("from")) {
                       from = parse_index(req.get_param_value("from"), "from");
                   }
                   auto cursor = std::make_shared<std::size_t>(from);
                   res.set_header("Cache-Control", "no-cache");
                   res.set_chunked_content_provider(
                       "text/event-stream", [&service, id, cursor](std::size_t, httplib::DataSink& sink) {
                           bool ended = false;
                           std::vector<StreamItem> items;
                           try {
                               items = service.wait_events(id, *cursor, std::chrono::milliseconds(500), ended);
                           } catch (const std::exception&) {
                               sink.done();
                               return true;
                           }
                           for (const auto& item : items) {
                               const std::string chunk = "id: " + std::to_string(item.index) +
                                                         "\nevent: robot\ndata: " + item.event.dump() + "\n\n";
                               if (!sink.write(chunk.data(), chunk.size())) return false;
                               *cursor = item.index + 1;
                           }
                           if (ended) {
                               const std::string end = "event: end\ndata: {}\n\n";
                               sink.write(end.data(), end.size());
                               sink.done();
                           } else if (items.empty()) {
                               const std::string keepalive = ": keep-alive\n\n";
                               if (!sink.write(keepalive.data(), keepalive.size())) return false;
                           }
                           return true;
                       });
               }));
}

bool serve_http(SessionService& service, const std::string& host, int port) {
    httplib::Server server;
    register_routes(server, service);
    return server.listen(host, port);
}

}  // namespace clcoach
