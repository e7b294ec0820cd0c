// Regenerates the checked-in golden vectors and the proof corpus. Run from
// the repository root after a deliberate format change:
//   ./build/tools/gen_golden .
#include <filesystem>
#include <fstream>
#include <iostream>

#include "golden_recipe.hpp"

using namespace hashrep;

namespace {

void write_file(const std::filesystem::path& path, std::span<const uint8_t> data) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out.good()) throw std::runtime_error("cannot write " + path.string());
    std::cout << "wrote " << path.string() << " (" << data.size() << " bytes)\n";
}

}  // namespace

int main(int argc, char** argv) {
    std::filesystem::path root = argc > 1 ? argv[1] : ".";
    auto golden_dir = root / "data" / "golden";
    auto corpus_dir = root / "data" / "proof_corpus";
    std::filesystem::create_directories(golden_dir);
    std::filesystem::create_directories(corpus_dir);

    // Hashcash golden vector: all-zero key, market "m", nonce 0.
    PublicKey zero_key{};
    Bytes market = to_bytes("m");
    Digest256 digest = reputation_digest(zero_key, market, 0);
    {
        std::ofstream out(golden_dir / "hashcash.txt");
        out << to_hex(digest) << " " << compute_reputation(zero_key, market, 0) << "\n";
        std::cout << "wrote " << (golden_dir / "hashcash.txt").string() << "\n";
    }

    golden::GoldenWorld w = golden::build_golden_world();
    write_file(golden_dir / "server_ad.bin", w.ad.serialize());
    write_file(golden_dir / "contract.bin", w.contract.serialize());
    write_file(golden_dir / "proof.bin", w.proof.serialize());

    write_file(corpus_dir / "chain.bin", w.chain.export_bytes());
    write_file(corpus_dir / "headers.bin", w.chain.headers().serialize());
    std::ofstream manifest(corpus_dir / "manifest.txt");
    for (const auto& entry : golden::build_proof_corpus(w)) {
        write_file(corpus_dir / entry.file, entry.proof.serialize());
        manifest << entry.file << " full=" << entry.full_verdict << " light=" << entry.light_verdict << "\n";
    }
    std::cout << "wrote " << (corpus_dir / "manifest.txt").string() << "\n";
    return 0;
}
