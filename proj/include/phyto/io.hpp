#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "phyto/errors.hpp"

namespace phyto {

namespace fs = std::filesystem;

namespace io {

using json = nlohmann::ordered_json;

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("not-found", "cannot open file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IngestError("io", "read failed: " + path.string());
    return std::move(buf).str();
}

// Write-to-temp plus rename; a failed run never leaves a partial output file.
inline void write_file_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw BuildError("io", "cannot write: " + tmp.string());
        out.write(content.data(), std::streamsize(content.size()));
        out.flush();
        if (!out) throw BuildError("io", "write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline void write_json_atomic(const fs::path& path, const json& value) {
    write_file_atomic(path, value.dump(2) + "\n");
}

inline json parse_json(std::string_view text, const std::string& what) {
    json parsed = json::parse(text, nullptr, false);
    if (parsed.is_discarded()) throw IngestError("schema", "invalid JSON in " + what);
    return parsed;
}

// One JSON object per non-empty line; the callback gets 1-based line numbers.
inline void for_each_jsonl(const fs::path& path,
                           const std::function<void(const json&, std::size_t)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("not-found", "cannot open file: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        json record = json::parse(line, nullptr, false);
        if (record.is_discarded()) {
            throw IngestError("schema",
                              path.string() + ":" + std::to_string(line_no) + ": invalid JSON");
        }
        fn(record, line_no);
    }
}

inline void write_jsonl_atomic(const fs::path& path, const std::vector<json>& records) {
    std::string content;
    for (const auto& record : records) {
        content += record.dump();
        content += '\n';
    }
    write_file_atomic(path, content);
}

}  // namespace io
}  // namespace phyto
