#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace preprod {

/// Image assets live as files in `<project dir>/assets/`; blocks reference
/// them by the relative path "assets/<name>".
class AssetStore {
public:
    AssetStore() = default;
    explicit AssetStore(std::filesystem::path project_dir);

    const std::filesystem::path& project_dir() const noexcept { return dir_; }
    bool attached() const noexcept { return !dir_.empty(); }

    /// Writes `bytes` as assets/<name> and returns the reference.
    std::string write(std::string_view name, std::string_view bytes) const;
    bool resolves(std::string_view ref) const;
    std::string read(std::string_view ref) const;
    std::filesystem::path path_of(std::string_view ref) const;

    /// Stores a user upload under a content-addressed name.
    std::string store_upload(std::string_view filename, std::string_view bytes) const;

    /// Copies every asset into another project directory.
    void copy_to(const std::filesystem::path& other_project_dir) const;

    static constexpr std::string_view kPrefix = "assets/";

private:
    std::filesystem::path dir_;
};

} // namespace preprod
