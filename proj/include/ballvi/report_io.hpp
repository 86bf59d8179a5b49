#pragma once

// Deterministic JSON and file output. The writer keeps keys in insertion
// order and prints every float with 17 significant digits, so identical runs
// produce identical bytes; the stock serializer is only used for parsing.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ballvi/audit.hpp"
#include "ballvi/errors.hpp"
#include "ballvi/util.hpp"

namespace ballvi {

inline std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if ((unsigned char)c < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof(buf), "\\u%04x", (unsigned)(unsigned char)c);
                out += buf;
            } else {
                out += c;
            }
        }
    }
    return out;
}

// Insertion-ordered JSON builder with two-space indentation.
class JsonWriter {
  public:
    std::string take() && { return std::move(out_); }
    const std::string& str() const { return out_; }

    void begin_object() { open('{', '}'); }
    void begin_object(const std::string& key) {
        prefix(key);
        push('{');
        out_ += '{';
    }
    void end_object() { close('}'); }

    void begin_array(const std::string& key) {
        prefix(key);
        push('[');
        out_ += '[';
    }
    void begin_array() { open('[', ']'); }
    void end_array() { close(']'); }

    void field(const std::string& key, double v) {
        prefix(key);
        out_ += fmt17(v);
    }
    void field(const std::string& key, int v) { field_raw(key, std::to_string(v)); }
    void field(const std::string& key, long v) { field_raw(key, std::to_string(v)); }
    void field(const std::string& key, bool v) { field_raw(key, v ? "true" : "false"); }
    void field(const std::string& key, const std::string& v) {
        field_raw(key, "\"" + json_escape(v) + "\"");
    }
    void field(const std::string& key, const char* v) { field(key, std::string(v)); }

    void elem(double v) {
        elem_prefix();
        out_ += fmt17(v);
    }
    void elem(int v) {
        elem_prefix();
        out_ += std::to_string(v);
    }
    void elem(const std::string& v) {
        elem_prefix();
        out_ += "\"" + json_escape(v) + "\"";
    }
    void elem_object() {
        elem_prefix();
        push('{');
        out_ += '{';
    }

  private:
    std::string out_;
    std::vector<std::pair<char, bool>> stack_; // bracket kind, has-items

    void push(char kind) { stack_.push_back({kind, false}); }

    void open(char kind, char) {
        elem_prefix_if_array();
        push(kind);
        out_ += kind;
    }

    void elem_prefix_if_array() {
        if (!stack_.empty() && stack_.back().first == '[') elem_prefix_inner();
    }

    void elem_prefix_inner() {
        if (stack_.back().second) out_ += ',';
        stack_.back().second = true;
        newline();
    }

    void elem_prefix() { elem_prefix_inner(); }

    void prefix(const std::string& key) {
        elem_prefix_inner();
        out_ += "\"" + json_escape(key) + "\": ";
    }

    void field_raw(const std::string& key, const std::string& raw) {
        prefix(key);
        out_ += raw;
    }

    void close(char kind) {
        const bool had = stack_.back().second;
        stack_.pop_back();
        if (had) newline();
        out_ += kind;
    }

    void newline() {
        out_ += '\n';
        out_.append(2 * stack_.size(), ' ');
    }
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file '" + path.string() + "'");
    out << content;
    if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

inline void append_estimate_records(JsonWriter& w, const EstimateReport& rep) {
    w.field("slack", rep.slack);
    w.begin_object("norms");
    w.field("c_poincare", rep.norms.c_poincare);
    w.field("omega", rep.norms.omega);
    w.field("qt", rep.norms.qt);
    w.field("f_l2_sq", rep.norms.f_l2_sq);
    w.field("f_linf", rep.norms.f_linf);
    w.field("u0_l2_sq", rep.norms.u0_l2_sq);
    w.field("grad_u0_sq", rep.norms.grad_u0_sq);
    w.end_object();
    w.begin_array("records");
    for (const EstimateRecord& r : rep.records) {
        w.elem_object();
        w.field("name", r.name);
        if (r.p > 0) w.field("p", r.p);
        w.field("measured", r.measured);
        w.field("bound", r.bound);
        w.field("pass", r.pass);
        w.end_object();
    }
    w.end_array();
    w.field("all_pass", rep.all_pass);
}

} // namespace ballvi
