#pragma once

// Output helpers: files are written to a temporary sibling and renamed into
// place, so an interrupted run never leaves a torn CSV behind.

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace nlhj {

inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write to '" + tmp.string() + "' failed");
    }
    std::filesystem::rename(tmp, path);
}

inline void write_csv_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& fill) {
    std::ostringstream os;
    fill(os);
    write_file_atomic(path, os.str());
}

}  // namespace nlhj
