#include "preprod/assets.hpp"

#include <fstream>
#include <iterator>
#include <sstream>

#include <openssl/evp.h>

#include "preprod/error.hpp"

namespace preprod {

namespace fs = std::filesystem;

namespace {

bool safe_name(std::string_view name) {
    if (name.empty() || name.find("..") != std::string_view::npos) return false;
    return name.find('/') == std::string_view::npos && name.find('\\') == std::string_view::npos;
}

std::string short_digest(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < 6 && i < len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

} // namespace

AssetStore::AssetStore(fs::path project_dir) : dir_(std::move(project_dir)) {}

fs::path AssetStore::path_of(std::string_view ref) const {
    if (!ref.starts_with(kPrefix) || !safe_name(ref.substr(kPrefix.size()))) {
        throw Error(Errc::PreconditionViolation, "malformed asset reference '" + std::string(ref) + "'");
    }
    return dir_ / "assets" / std::string(ref.substr(kPrefix.size()));
}

std::string AssetStore::write(std::string_view name, std::string_view bytes) const {
    if (!attached()) throw Error(Errc::AssetWriteFailure, "no project directory attached");
    if (!safe_name(name)) throw Error(Errc::AssetWriteFailure, "bad asset name '" + std::string(name) + "'");
    std::error_code ec;
    fs::create_directories(dir_ / "assets", ec);
    const auto path = dir_ / "assets" / std::string(name);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::AssetWriteFailure, "cannot write " + path.string());
    return std::string(kPrefix) + std::string(name);
}

bool AssetStore::resolves(std::string_view ref) const {
    if (!attached()) return false;
    try {
        return fs::is_regular_file(path_of(ref));
    } catch (const Error&) {
        return false;
    }
}

std::string AssetStore::read(std::string_view ref) const {
    std::ifstream in(path_of(ref), std::ios::binary);
    if (!in) throw Error(Errc::IoFailure, "cannot read asset '" + std::string(ref) + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string AssetStore::store_upload(std::string_view filename, std::string_view bytes) const {
    std::string clean;
    for (char c : filename) {
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_') clean.push_back(c);
    }
    if (clean.empty() || clean.find("..") != std::string::npos) clean = "upload.bin";
    return write("upload-" + short_digest(bytes) + "-" + clean, bytes);
}

void AssetStore::copy_to(const fs::path& other_project_dir) const {
    if (!attached()) return;
    const auto src = dir_ / "assets";
    const auto dst = other_project_dir / "assets";
    std::error_code ec;
    if (!fs::exists(src, ec)) return;
    if (fs::exists(dst, ec) && fs::equivalent(src, dst, ec)) return;
    fs::create_directories(dst, ec);
    fs::copy(src, dst, fs::copy_options::recursive | fs::copy_options::overwrite_existing, ec);
    if (ec) throw Error(Errc::IoFailure, "cannot copy assets to " + dst.string() + ": " + ec.message());
}

} // namespace preprod
