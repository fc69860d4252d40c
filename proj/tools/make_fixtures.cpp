// Regenerates the data files shipped under data/ from their recorded seeds.
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "sdrnw/io.hpp"
#include "sdrnw/simulate.hpp"

int main(int argc, char** argv) {
    const std::filesystem::path dir = argc > 1 ? argv[1] : "data";
    try {
        std::vector<std::string> cols;
        for (int j = 1; j <= 20; ++j) cols.push_back("s" + std::to_string(j));
        sdrnw::io::write_csv(dir / "model2_S.csv", cols, sdrnw::model2_generate_s(20, sdrnw::kModel2SSeed));
        const auto m = sdrnw::mussels_lookalike();
        sdrnw::io::write_csv(dir / "mussels_lookalike.csv", m.columns, m.values);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }
    return 0;
}
