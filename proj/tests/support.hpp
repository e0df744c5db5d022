#pragma once

#include <atomic>
#include <filesystem>
#include <random>
#include <string>

#include "clcoach/dialogue.hpp"

namespace testing {

inline const clcoach::SentenceBank& shipped_bank() {
    static const auto bank = clcoach::load_banks(std::string(CLCOACH_DATA_DIR) + "/banks.txt");
    return bank;
}

// Fresh, empty directory under the system temp dir; removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("clcoach-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testing
