#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "critsense/config.hpp"

namespace critsense {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitNumericalFailure = 3;

std::string sha256_hex(const std::string& bytes);

struct EmittedFile {
    std::string name;
    std::string sha256;
    std::size_t bytes = 0;
};

// Files written by one run. Names must be plain file names so nothing lands
// outside the output directory.
class OutputSet {
public:
    explicit OutputSet(std::filesystem::path dir);

    void write(const std::string& name, const std::function<void(std::ostream&)>& fill);
    const std::vector<EmittedFile>& files() const { return files_; }
    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
    std::vector<EmittedFile> files_;
};

// error.json with status, exit_code, scenario, error_type, message and the
// full list of messages.
void write_error_record(const std::filesystem::path& out_dir, const std::string& scenario, int exit_code,
                        const std::string& type, const std::vector<std::string>& messages);

// Runs the configured scenario into out_dir, writes manifest.json (every CSV
// with its SHA-256) on success or error.json on failure, and returns the exit
// status. Progress lines go to `log`.
int run(const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace critsense
