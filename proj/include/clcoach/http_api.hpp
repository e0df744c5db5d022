#pragma once
// JSON-over-HTTP front of SessionService.
//
//   GET  /health
//   GET  /sessions                      list
//   POST /sessions                      {"condition","person"[,"seed"]} -> 201 {session, events}
//   GET  /sessions/{id}                 session info
//   POST /sessions/{id}/events          {"type": "yes_no"|"descriptive"|"reply", "transcript"}
//                                       {"type": "affect", "valence", "arousal"} or {"type":"affect","frames":[[v,a],...]}
//                                       {"type": "features", "values": [...]} or {"type":"features","frames":[[...],...]}
//                                       -> {events, session[, frame]}
//   GET  /sessions/{id}/snapshot        C3 memory view (409 otherwise)
//   GET  /sessions/{id}/stream          text/event-stream of robot events ("event: robot",
//                                       "id: <index>"); resumes after Last-Event-ID or ?from=N;
//                                       "event: end" once the session is closed
//   GET  /sessions/{id}/log             JSON-lines session log
//   POST /sessions/{id}/close           -> {log, model}
//
// Errors: {"error": kind, "message"} with 400 (bad request / data), 404 (unknown
// session), 409 (protocol, not available), 410 (closed), 500 otherwise.

#include <string>

#include "clcoach/service.hpp"

namespace httplib {
class Server;
}

namespace clcoach {

void register_routes(httplib::Server& server, SessionService& service);

// Blocks until the server stops. Returns false if it could not bind.
bool serve_http(SessionService& service, const std::string& host, int port);

}  // namespace clcoach
