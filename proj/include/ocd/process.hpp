#pragma once

#include <chrono>
#include <filesystem>
#include <string>

namespace ocd {

struct ProcessResult
{
    int exit_status = -1; // shell exit status, 128 + signal when killed by a signal
    bool timed_out = false;
    double duration_seconds = 0.0;
};

/// Runs `command` through /bin/sh in `cwd` with stdout and stderr sent to
/// the given files. The whole process group is killed on timeout.
ProcessResult run_shell(const std::string& command, const std::filesystem::path& cwd,
                        const std::filesystem::path& stdout_log, const std::filesystem::path& stderr_log,
                        std::chrono::seconds timeout);

/// A uniquely named directory removed on destruction.
class TempDir
{
public:
    explicit TempDir(const std::string& prefix = "ocd");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return m_path; }

private:
    std::filesystem::path m_path;
};

} // namespace ocd
