#pragma once

// Client for a hosted multimodal chat endpoint playing the generate, worker
// and judge roles, plus an in-process scripted transport and a small HTTP
// stub server that replays canned replies.

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <mutex>

#include <httplib.h>

#include <ctxplace/embedded_prompts.hpp>

#include "judge.hpp"
#include "vac.hpp"

namespace ctxplace {

struct TransportError : Error {
    using Error::Error;
};

struct ProtocolError : Error {
    std::string raw;
    ProtocolError(const std::string& what, std::string raw_text) : Error(what), raw(std::move(raw_text)) {}
};

struct VlmConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4o";
    std::string api_key_env = "OPENAI_API_KEY";
    double timeout_seconds = 120.0;
    int max_retries = 2;
    double temperature = 0.0;
    int image_width = 512;

    void validate() const {
        if (!(timeout_seconds > 0)) throw ConfigError("vlm timeout must be positive");
        if (max_retries < 0) throw ConfigError("vlm max_retries must be >= 0");
        if (image_width < 16) throw ConfigError("vlm image_width must be >= 16");
        if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0)
            throw ConfigError("vlm endpoint must start with http:// or https://");
    }

    // Reads the key from the configured variable; a missing or empty value is
    // a configuration error naming the variable.
    std::string api_key() const {
        const char* v = std::getenv(api_key_env.c_str());
        if (!v || !*v) throw ConfigError("environment variable " + api_key_env + " is not set (needed for vlm mode)");
        return v;
    }
};

enum class Role { generate, worker, judge };

inline const char* to_string(Role r) {
    switch (r) {
        case Role::generate: return "generate";
        case Role::worker: return "worker";
        case Role::judge: return "judge";
    }
    return "?";
}

struct NamedImage {
    std::string name;
    std::string png;
};

struct ChatRequest {
    Role role = Role::generate;
    std::string prompt;
    std::vector<NamedImage> images;
};

class Transport {
public:
    virtual ~Transport() = default;
    virtual std::string complete(const ChatRequest& req) = 0;
};

// ------------------------------------------------------------ prompts

class PromptLibrary {
public:
    // Templates compiled into the binary from prompts/*.txt.
    static PromptLibrary embedded() {
        PromptLibrary lib;
        for (const auto& [name, text] : ctxplace::embedded::kPrompts) lib.templates_[std::string(name)] = std::string(text);
        return lib;
    }

    // Templates from a directory, overriding the embedded ones by file stem.
    static PromptLibrary from_dir(const std::filesystem::path& dir) {
        PromptLibrary lib = embedded();
        if (!std::filesystem::is_directory(dir)) throw ConfigError("prompt directory not found: " + dir.string());
        for (const auto& e : std::filesystem::directory_iterator(dir))
            if (e.path().extension() == ".txt") lib.templates_[e.path().stem().string()] = read_text_file(e.path());
        return lib;
    }

    const std::string& get(const std::string& name) const {
        auto it = templates_.find(name);
        if (it == templates_.end()) throw ConfigError("no prompt template named '" + name + "'");
        return it->second;
    }

    // Replaces every {{key}}; a placeholder without a value is an error.
    std::string bind(const std::string& name, const std::map<std::string, std::string>& values) const {
        const std::string& t = get(name);
        std::string out;
        std::size_t pos = 0;
        while (true) {
            const auto open = t.find("{{", pos);
            if (open == std::string::npos) break;
            const auto close = t.find("}}", open);
            if (close == std::string::npos) break;
            const std::string key = t.substr(open + 2, close - open - 2);
            auto it = values.find(key);
            if (it == values.end()) throw ConfigError("prompt '" + name + "': placeholder {{" + key + "}} is unbound");
            out.append(t, pos, open - pos);
            out += it->second;
            pos = close + 2;
        }
        out.append(t, pos, std::string::npos);
        return out;
    }

private:
    std::map<std::string, std::string> templates_;
};

// ------------------------------------------------------------ transports

struct ScriptedReply {
    Role role = Role::generate;
    std::string content;
};

inline Role role_from_string(std::string_view s) {
    if (s == "generate") return Role::generate;
    if (s == "worker") return Role::worker;
    if (s == "judge") return Role::judge;
    throw SpecError("unknown role '" + std::string(s) + "'");
}

inline std::vector<ScriptedReply> scripted_replies_from_json(const json& j) {
    std::vector<ScriptedReply> out;
    for (const auto& r : j) {
        ScriptedReply s;
        s.role = role_from_string(r.at("role").get<std::string>());
        const auto& c = r.at("content");
        s.content = c.is_string() ? c.get<std::string>() : c.dump();
        out.push_back(std::move(s));
    }
    return out;
}

// Replays canned replies in order; the request role must match the reply's.
class ScriptedTransport : public Transport {
public:
    explicit ScriptedTransport(std::vector<ScriptedReply> replies) : replies_(std::move(replies)) {}

    std::string complete(const ChatRequest& req) override {
        if (next_ >= replies_.size())
            throw TransportError("scripted transport exhausted after " + std::to_string(replies_.size()) + " replies");
        const auto& r = replies_[next_++];
        if (r.role != req.role)
            throw TransportError(std::string("scripted reply ") + std::to_string(next_ - 1) + " is for role " +
                                 to_string(r.role) + ", request was " + to_string(req.role));
        return r.content;
    }

    std::size_t consumed() const { return next_; }
    std::size_t size() const { return replies_.size(); }

private:
    std::vector<ScriptedReply> replies_;
    std::size_t next_ = 0;
};

namespace detail {

struct UrlParts {
    std::string base;  // scheme://host[:port]
    std::string path;
};

inline UrlParts split_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("malformed endpoint URL '" + url + "'");
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace detail

// OpenAI-style chat completions over HTTP(S). Images go inline as PNG data URLs.
class HttpTransport : public Transport {
public:
    HttpTransport(VlmConfig cfg, std::string api_key) : cfg_(std::move(cfg)), key_(std::move(api_key)) { cfg_.validate(); }

    std::string complete(const ChatRequest& req) override {
        json content = json::array();
        content.push_back({{"type", "text"}, {"text", req.prompt}});
        for (const auto& img : req.images)
            content.push_back({{"type", "image_url"},
                               {"image_url", {{"url", "data:image/png;base64," + httplib::detail::base64_encode(img.png)}}}});
        json body;
        body["model"] = cfg_.model;
        body["temperature"] = cfg_.temperature;
        body["messages"] = json::array({json{{"role", "user"}, {"content", content}}});

        const auto url = detail::split_url(cfg_.endpoint);
        httplib::Client cli(url.base);
        const auto secs = static_cast<time_t>(cfg_.timeout_seconds);
        const auto usecs = static_cast<time_t>((cfg_.timeout_seconds - static_cast<double>(secs)) * 1e6);
        cli.set_connection_timeout(secs, usecs);
        cli.set_read_timeout(secs, usecs);
        cli.set_write_timeout(secs, usecs);
        httplib::Headers headers{{"Authorization", "Bearer " + key_}};
        auto res = cli.Post(url.path, headers, body.dump(), "application/json");
        if (!res) throw TransportError("request to " + cfg_.endpoint + " failed: " + httplib::to_string(res.error()));
        if (res->status != 200)
            throw TransportError("endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500));
        try {
            const json j = json::parse(res->body);
            return j.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw ProtocolError(std::string("unexpected response envelope: ") + e.what(), res->body);
        }
    }

private:
    VlmConfig cfg_;
    std::string key_;
};

// Serves canned replies in order on POST .../chat/completions until stopped.
// Exhausted scripts answer HTTP 500.
class StubServer {
public:
    explicit StubServer(std::vector<ScriptedReply> replies) : replies_(std::move(replies)) {
        server_.Post(R"(.*/chat/completions)", [this](const httplib::Request&, httplib::Response& res) {
            std::lock_guard lock(mu_);
            if (next_ >= replies_.size()) {
                res.status = 500;
                res.set_content(R"({"error":"stub script exhausted"})", "application/json");
                return;
            }
            const json body{{"choices", json::array({json{{"index", 0},
                                                            {"message", {{"role", "assistant"}, {"content", replies_[next_++].content}}}}})}};
            res.set_content(body.dump(), "application/json");
        });
    }

    // Binds (port 0 picks a free port) and returns the bound port.
    int bind(const std::string& host, int port) {
        const int p = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
        if (p < 0) throw ConfigError("cannot bind stub server to " + host + ":" + std::to_string(port));
        return p;
    }
    void listen() { server_.listen_after_bind(); }
    void stop() { server_.stop(); }
    bool running() const { return server_.is_running(); }
    std::size_t served() {
        std::lock_guard lock(mu_);
        return next_;
    }

private:
    httplib::Server server_;
    std::vector<ScriptedReply> replies_;
    std::size_t next_ = 0;
    std::mutex mu_;
};

// --------------------------------------------------------- transcript log

// Every request, verbatim, with a monotonically increasing index. Optionally
// appended to a JSON-lines file as it happens.
class TranscriptLog {
public:
    TranscriptLog() = default;
    explicit TranscriptLog(std::filesystem::path file) : file_(std::move(file)) {
        if (!file_.empty() && file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    }

    void record(const ChatRequest& req, int attempt, const std::string* response, const std::string* error) {
        json j;
        j["index"] = entries_.size();
        j["role"] = to_string(req.role);
        j["attempt"] = attempt;
        j["prompt"] = req.prompt;
        j["images"] = json::array();
        for (const auto& img : req.images) j["images"].push_back({{"name", img.name}, {"bytes", img.png.size()}});
        if (response) j["response"] = *response;
        if (error) j["error"] = *error;
        if (!file_.empty()) {
            std::ofstream out(file_, std::ios::app | std::ios::binary);
            out << j.dump() << '\n';
        }
        entries_.push_back(std::move(j));
    }

    const std::vector<json>& entries() const { return entries_; }

private:
    std::filesystem::path file_;
    std::vector<json> entries_;
};

// ----------------------------------------------------------- parsing

// First balanced {...} in free text (code fences and prose around it are
// ignored); nullopt when none parses.
inline std::optional<json> extract_json_object(const std::string& text) {
    for (std::size_t start = text.find('{'); start != std::string::npos; start = text.find('{', start + 1)) {
        int depth = 0;
        bool in_str = false, esc = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            const char c = text[i];
            if (in_str) {
                if (esc) esc = false;
                else if (c == '\\') esc = true;
                else if (c == '"') in_str = false;
                continue;
            }
            if (c == '"') in_str = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                try {
                    json j = json::parse(text.substr(start, i - start + 1));
                    if (j.is_object()) return j;
                } catch (const json::exception&) {
                }
                break;
            }
        }
    }
    return std::nullopt;
}

struct GenerateResult {
    enum class Action { create, move } action = Action::create;
    std::string target;
    std::string asset;
    std::vector<std::string> related;

    friend bool operator==(const GenerateResult&, const GenerateResult&) = default;
};

namespace detail {

inline double number_field(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw SpecError(std::string("missing numeric field '") + key + "'");
    return j[key].get<double>();
}

inline GenerateResult parse_generate(const json& j) {
    GenerateResult g;
    const auto action = j.value("action", std::string());
    if (action == "new") g.action = GenerateResult::Action::create;
    else if (action == "move") g.action = GenerateResult::Action::move;
    else throw SpecError("action must be \"new\" or \"move\"");
    if (!j.contains("target") || !j["target"].is_string() || j["target"].get<std::string>().empty())
        throw SpecError("missing string field 'target'");
    g.target = j["target"].get<std::string>();
    g.asset = j.value("asset", std::string());
    if (j.contains("related")) {
        if (!j["related"].is_array()) throw SpecError("'related' must be a list of ids");
        for (const auto& r : j["related"]) g.related.push_back(r.get<std::string>());
    }
    return g;
}

inline Transform parse_worker(const json& j) {
    if (!j.contains("position") || !j["position"].is_array() || j["position"].size() != 3)
        throw SpecError("missing field 'position' [x, y, z]");
    Transform t;
    t.position = vec3_from_json(j["position"], "position");
    t.orientation.yaw = number_field(j, "yaw");
    if (!std::isfinite(t.orientation.yaw)) throw SpecError("yaw must be finite");
    t.orientation = t.orientation.normalized();
    return t;
}

inline Verdict parse_verdict(const json& j) {
    Verdict v;
    if (!j.contains("pass") || !j["pass"].is_boolean()) throw SpecError("missing boolean field 'pass'");
    v.pass = j["pass"].get<bool>();
    if (j.contains("violations")) {
        if (!j["violations"].is_array()) throw SpecError("'violations' must be a list");
        for (const auto& x : j["violations"]) {
            Violation viol;
            const auto code = violation_code_from_string(x.value("code", std::string()));
            if (!code) throw SpecError("unknown violation code '" + x.value("code", std::string()) + "'");
            viol.code = *code;
            if (!x.contains("subjects") || !x["subjects"].is_array() || x["subjects"].empty())
                throw SpecError("violation needs a non-empty 'subjects' list");
            viol.subjects = x["subjects"].get<std::vector<std::string>>();
            viol.magnitude = x.contains("magnitude") ? number_field(x, "magnitude") : 1.0;
            if (!(viol.magnitude > 0)) throw SpecError("violation magnitude must be positive");
            if (x.contains("suggested_delta") && !x["suggested_delta"].is_null()) {
                const auto& d = x["suggested_delta"];
                Correction c;
                if (d.contains("translation")) c.translation = vec3_from_json(d["translation"], "translation");
                c.yaw_delta = d.value("yaw", 0.0);
                viol.suggested_delta = c;
            }
            v.violations.push_back(std::move(viol));
        }
    }
    if (!v.pass && v.violations.empty()) throw SpecError("a failing verdict must list at least one violation");
    return v;
}

}  // namespace detail

// ------------------------------------------------------------ client

struct JudgeCues {
    std::string bounding_boxes;
    std::string relation_angles;
    std::vector<NamedImage> images;
};

inline std::string asset_list_text(const Scene& scene) {
    std::string out;
    for (const auto& a : scene.catalog)
        out += "asset=" + a.asset_id + " half_extents=" + fmt_vec(a.half_extents, 3) + "\n";
    return out;
}

inline std::string join_ids(const std::vector<std::string>& ids) {
    std::string s;
    for (const auto& id : ids) s += (s.empty() ? "" : ", ") + id;
    return s.empty() ? "(none)" : s;
}

inline std::vector<NamedImage> raster_images(const VacBundle& b, int width) {
    std::vector<NamedImage> out;
    for (const auto* d : b.drawings()) out.push_back({d->name + ".png", encode_png(rasterize(*d, width))});
    return out;
}

class VlmClient {
public:
    VlmClient(Transport& transport, VlmConfig cfg, PromptLibrary prompts, TranscriptLog* log = nullptr)
        : transport_(transport), cfg_(std::move(cfg)), prompts_(std::move(prompts)), log_(log) {
        cfg_.validate();
    }

    GenerateResult generate_step(const std::string& instruction, const Scene& scene,
                                 const std::vector<std::string>& placed, std::vector<NamedImage> images = {}) {
        ChatRequest req{Role::generate,
                        prompts_.bind("generate", {{"instruction", instruction},
                                                   {"placed", join_ids(placed)},
                                                   {"assets", asset_list_text(scene)},
                                                   {"snapshot", scene_snapshot_text(scene)}}),
                        std::move(images)};
        return ask(req, detail::parse_generate);
    }

    Transform worker_step(const std::string& instruction, const Scene& scene, const std::string& target,
                          const std::vector<std::string>& related, const std::string& bounding_boxes,
                          const std::string& feedback = {}) {
        ChatRequest req{Role::worker,
                        prompts_.bind("worker", {{"instruction", instruction},
                                                 {"target", target},
                                                 {"related", join_ids(related)},
                                                 {"snapshot", scene_snapshot_text(scene)},
                                                 {"bounding_boxes", bounding_boxes},
                                                 {"feedback", feedback.empty() ? "" : "Judge feedback:\n" + feedback + "\n"}}),
                        {}};
        return ask(req, detail::parse_worker);
    }

    Verdict judge_step(const std::string& instruction, const Scene& scene, const std::vector<std::string>& targets,
                       const std::vector<std::string>& related, const JudgeCues& cues) {
        std::vector<std::string> names;
        for (const auto& i : cues.images) names.push_back(i.name);
        ChatRequest req{Role::judge,
                        prompts_.bind("judge", {{"instruction", instruction},
                                                {"target", join_ids(targets)},
                                                {"related", join_ids(related)},
                                                {"snapshot", scene_snapshot_text(scene)},
                                                {"bounding_boxes", cues.bounding_boxes},
                                                {"relation_angles", cues.relation_angles},
                                                {"images", join_ids(names)}}),
                        cues.images};
        return ask(req, detail::parse_verdict);
    }

    const VlmConfig& config() const { return cfg_; }

private:
    // Sends, parses, and on a malformed reply retries with the repair prompt
    // up to max_retries times.
    template <class Parse>
    auto ask(const ChatRequest& original, Parse parse) -> decltype(parse(json{})) {
        ChatRequest req = original;
        std::string last_raw, last_err;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            std::string raw;
            try {
                raw = transport_.complete(req);
            } catch (const TransportError& e) {
                const std::string msg = e.what();
                if (log_) log_->record(req, attempt, nullptr, &msg);
                throw;
            }
            if (log_) log_->record(req, attempt, &raw, nullptr);
            last_raw = raw;
            try {
                const auto j = extract_json_object(raw);
                if (!j) throw SpecError("no JSON object found");
                return parse(*j);
            } catch (const SpecError& e) {
                last_err = e.what();
            } catch (const json::exception& e) {
                last_err = e.what();
            }
            req.prompt = original.prompt + "\n\n" + prompts_.bind("repair", {{"error", last_err}, {"reply", raw}});
        }
        throw ProtocolError(std::string(to_string(original.role)) + " reply unusable after " +
                                std::to_string(cfg_.max_retries + 1) + " attempts: " + last_err,
                            last_raw);
    }

    Transport& transport_;
    VlmConfig cfg_;
    PromptLibrary prompts_;
    TranscriptLog* log_;
};

}  // namespace ctxplace
