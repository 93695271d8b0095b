// Regenerates the checked-in golden files: rendered prompt transcripts, the
// scripted evolutionary-loop run directory, and the CLI end-to-end run
// directory. Run after any intentional change to prompts, serialization or
// loop behavior, then review the diff.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>

#include "golden_loop.hpp"
#include "golden_prompts.hpp"
#include "trisk/evolve.hpp"
#include "trisk/llm.hpp"
#include "trisk/prompts.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kSource = TRISK_SOURCE_DIR;
const std::string kBin = TRISK_BIN;

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

void run(const std::string& command) {
    std::cout << "+ " << command << "\n";
    if (std::system(command.c_str()) != 0) throw std::runtime_error("command failed: " + command);
}

void update_prompt_goldens() {
    const trisk::TemplateStore store(kSource + "/prompts");
    for (const auto& [name, text] : goldens::golden_prompt_files(store))
        write_file(kSource + "/tests/golden/prompts/" + name, text);
    std::cout << "wrote prompt goldens\n";
}

void update_run_loop() {
    const fs::path run_dir = kSource + "/tests/golden/run_loop";
    fs::remove_all(run_dir);
    const auto client = trisk::mock_from_fixture(goldens::loop_fixture_path(kSource));
    const trisk::TemplateStore store(kSource + "/prompts");
    trisk::run_evolution(goldens::loop_config(), goldens::loop_train_data(),
                         goldens::loop_test_data(), *client, store, run_dir.string());
    std::cout << "wrote " << run_dir.string() << "\n";
}

void update_run_basic() {
    const fs::path run_dir = kSource + "/tests/golden/run_basic";
    fs::remove_all(run_dir);
    const fs::path data_dir = fs::temp_directory_path() / "trisk_golden_data";
    fs::remove_all(data_dir);
    // basic_config.json names its fixture relative to tests/, so run from there.
    const std::string prefix = "cd " + kSource + "/tests && " + kBin;
    run(prefix + " gen-data --config fixtures/basic_config.json --out " + data_dir.string());
    run(prefix + " evolve --config fixtures/basic_config.json --data " + data_dir.string() +
        " --out " + run_dir.string());
    fs::remove_all(data_dir);
    std::cout << "wrote " << run_dir.string() << "\n";
}

}  // namespace

int main() {
    try {
        update_prompt_goldens();
        update_run_loop();
        update_run_basic();
        std::cout << "goldens updated\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "update_goldens: " << e.what() << "\n";
        return 1;
    }
}
