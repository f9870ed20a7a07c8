#pragma once

// Shared test helpers: temp dirs, file io, random corpora, subprocesses.

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qexp/text.hpp"

namespace testing_support {

namespace fs = std::filesystem;

inline fs::path source_dir() { return QEXP_SOURCE_DIR; }
inline fs::path test_data(const std::string& rel) { return source_dir() / "tests" / "data" / rel; }
inline fs::path repo_data(const std::string& rel) { return source_dir() / "data" / rel; }

class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "qexp-test-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

inline void write_text(const fs::path& p, const std::string& s) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

inline std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// The three-document corpus most examples are stated against.
inline std::vector<qexp::Document> toy_docs() {
    return {{"d1", "cat sat mat", {}}, {"d2", "cat cat dog", {}}, {"d3", "dog barks", {}}};
}

// Random corpus over a small vocabulary so terms repeat and scores tie.
inline std::vector<qexp::Document> random_docs(std::mt19937& rng, std::size_t max_docs = 50) {
    static const std::vector<std::string> vocab = {
        "apple", "banana", "cherry", "river", "stone", "market", "engine", "garden", "winter", "signal",
        "rocket", "silver", "planet", "forest", "harbor", "castle", "mirror", "copper", "violin", "desert",
        "running", "played", "quickly", "the", "and", "of", "Apple", "RIVER", "42", "1989"};
    std::uniform_int_distribution<std::size_t> n_docs(1, max_docs), len(0, 25), word(0, vocab.size() - 1);
    std::vector<qexp::Document> docs;
    const auto n = n_docs(rng);
    for (std::size_t i = 0; i < n; ++i) {
        std::string text;
        const auto l = len(rng);
        for (std::size_t j = 0; j < l; ++j) {
            if (j > 0) text += (rng() % 7 == 0) ? ", " : " ";
            text += vocab[word(rng)];
        }
        docs.push_back({"doc" + std::to_string(i), text, {}});
    }
    return docs;
}

inline std::string random_query(std::mt19937& rng, std::size_t max_words = 4) {
    static const std::vector<std::string> words = {"apple",  "river",  "stone",  "engine", "garden", "the",
                                                   "planet", "forest", "castle", "violin", "running", "nothing"};
    std::uniform_int_distribution<std::size_t> n(1, max_words), w(0, words.size() - 1);
    std::string q;
    const auto k = n(rng);
    for (std::size_t i = 0; i < k; ++i) q += (i ? " " : "") + words[w(rng)];
    return q;
}

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr interleaved
};

inline CommandResult run_command(const std::string& cmd) {
    CommandResult r;
    FILE* p = ::popen((cmd + " 2>&1").c_str(), "r");
    if (p == nullptr) return r;
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.output.append(buf, n);
    const int status = ::pclose(p);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

inline std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

}  // namespace testing_support
