#include "rd/prompt.hpp"

#include <cctype>
#include <optional>

#include "rd/data_model.hpp"
#include "rd/errors.hpp"
#include "rd/io.hpp"

namespace rd::tools {

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Length of the placeholder starting at `pos` ("{name}"), or nullopt.
std::optional<std::size_t> placeholder_at(const std::string& body, std::size_t pos) {
    if (body[pos] != '{' || pos + 1 >= body.size() || !ident_start(body[pos + 1])) return std::nullopt;
    std::size_t i = pos + 2;
    while (i < body.size() && ident_char(body[i])) ++i;
    if (i >= body.size() || body[i] != '}') return std::nullopt;
    return i - pos + 1;
}

}  // namespace

std::set<std::string> placeholders(const PromptTemplate& tmpl) {
    std::set<std::string> names;
    for (std::size_t i = 0; i < tmpl.body.size(); ++i) {
        if (auto len = placeholder_at(tmpl.body, i)) {
            names.insert(tmpl.body.substr(i + 1, *len - 2));
            i += *len - 1;
        }
    }
    return names;
}

std::string render_prompt(const PromptTemplate& tmpl, const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(tmpl.body.size());
    for (std::size_t i = 0; i < tmpl.body.size();) {
        if (auto len = placeholder_at(tmpl.body, i)) {
            const auto name = tmpl.body.substr(i + 1, *len - 2);
            auto it = bindings.find(name);
            if (it == bindings.end()) throw MissingBinding(name);
            out += it->second;
            i += *len;
        } else {
            out += tmpl.body[i++];
        }
    }
    return out;
}

PromptTemplate load_template(const std::filesystem::path& path) {
    Json j;
    try {
        j = Json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("template " + path.string() + " is not valid JSON: " + e.what());
    }
    PromptTemplate t;
    try {
        t.name = j.at("name").get<std::string>();
        t.shot_count = j.at("shot_count").get<int>();
        if (j.contains("body"))
            t.body = j.at("body").get<std::string>();
        else
            t.body = io::read_file(path.parent_path() / j.at("body_file").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw Error("template " + path.string() + ": " + e.what());
    }
    return t;
}

}  // namespace rd::tools
