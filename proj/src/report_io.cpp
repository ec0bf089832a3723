#include "merging/report_io.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include "merging/errors.hpp"

namespace merging {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("io", "cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw ValidationError("io", "failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw ValidationError("io", "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_json_atomic(const std::filesystem::path& path, const Json& value) {
    write_file_atomic(path, value.dump(2) + "\n");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("io", "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ensure_directory(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ValidationError("io", "cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace merging
