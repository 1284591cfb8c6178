#include "stens/embeddings.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "stens/error.hpp"
#include "stens/text.hpp"

namespace stens {

std::string to_string(const PatchKey& key) {
    if (key.sub) return fmt::format("{}/{}/{}", key.run, key.patch, *key.sub);
    return fmt::format("{}/{}", key.run, key.patch);
}

void EmbeddingTable::insert(PatchKey key, std::vector<double> values) {
    if (dim_ == 0) dim_ = values.size();
    if (values.size() != dim_) {
        throw input_error(fmt::format("embedding {}: dimension {} differs from {}", to_string(key), values.size(), dim_),
                          "embeddings");
    }
    for (double v : values) {
        if (!std::isfinite(v)) throw input_error("embedding " + to_string(key) + ": non-finite component", "embeddings");
    }
    auto name = to_string(key);
    if (!vectors_.emplace(std::move(key), std::move(values)).second) {
        throw input_error("embedding " + name + " listed twice", "embeddings");
    }
}

const std::vector<double>* EmbeddingTable::find(const PatchKey& key) const {
    const auto it = vectors_.find(key);
    return it == vectors_.end() ? nullptr : &it->second;
}

const std::vector<double>& EmbeddingTable::at(const PatchKey& key) const {
    if (const auto* v = find(key)) return *v;
    throw not_found("no embedding for patch " + to_string(key), "embeddings");
}

std::vector<std::size_t> EmbeddingTable::sub_indices(const std::string& run, std::size_t patch) const {
    std::vector<std::size_t> out;
    auto it = vectors_.lower_bound(PatchKey{run, patch, std::nullopt});
    for (; it != vectors_.end() && it->first.run == run && it->first.patch == patch; ++it) {
        if (it->first.sub) out.push_back(*it->first.sub);
    }
    return out;
}

namespace {

std::size_t parse_index(std::string_view field, const std::string& file, std::size_t line, const char* what) {
    const auto v = text::parse_double(field);
    if (!v || *v < 0 || std::floor(*v) != *v) {
        throw input_error(fmt::format("{}:{}: invalid {} '{}'", file, line, what, text::trim(field)), file);
    }
    return static_cast<std::size_t>(*v);
}

} // namespace

EmbeddingTable load_embeddings(const std::filesystem::path& path,
                               const std::map<std::string, std::size_t>& expected_patches,
                               std::optional<std::size_t> expected_subs, const FormatConfig& format) {
    const auto file = path.string();
    const auto buffer = text::read_file(file);
    text::LineReader reader(buffer);
    std::string_view line;
    std::size_t dim = 0;
    bool have_header = false;
    EmbeddingTable table;
    while (reader.next(line)) {
        if (text::trim(line).empty()) continue;
        const auto fields = text::split(line, format.delimiter);
        if (!have_header) {
            if (fields.size() < 4 || text::lower(text::trim(fields[0])) != "run" ||
                text::lower(text::trim(fields[1])) != "patch" || text::lower(text::trim(fields[2])) != "sub") {
                throw input_error(file + ": header must start with run,patch,sub followed by feature columns", file);
            }
            dim = fields.size() - 3;
            table = EmbeddingTable(dim);
            have_header = true;
            continue;
        }
        const auto row = reader.line_number();
        if (fields.size() != dim + 3) {
            throw input_error(fmt::format("{}:{}: feature dimension {} differs from header dimension {}", file, row,
                                          fields.size() < 3 ? 0 : fields.size() - 3, dim),
                              file);
        }
        PatchKey key;
        key.run = std::string(text::trim(fields[0]));
        key.patch = parse_index(fields[1], file, row, "patch index");
        if (!text::trim(fields[2]).empty()) key.sub = parse_index(fields[2], file, row, "sub index");
        std::vector<double> values(dim);
        for (std::size_t d = 0; d < dim; ++d) {
            const auto v = text::parse_double(fields[d + 3]);
            if (!v) throw input_error(fmt::format("{}:{}: non-numeric feature in column {}", file, row, d + 4), file);
            values[d] = *v;
        }
        table.insert(std::move(key), std::move(values));
    }
    if (!have_header) throw input_error(file + ": empty embedding file", file);

    std::vector<std::string> gaps;
    for (const auto& [run, count] : expected_patches) {
        for (std::size_t p = 0; p < count; ++p) {
            if (expected_subs) {
                for (std::size_t s = 0; s < *expected_subs; ++s) {
                    if (!table.find({run, p, s})) gaps.push_back(fmt::format("{} patch {} sub {}", run, p, s));
                }
            } else if (!table.find({run, p, std::nullopt})) {
                gaps.push_back(fmt::format("{} patch {}", run, p));
            }
        }
    }
    if (!gaps.empty()) {
        std::string list;
        for (std::size_t i = 0; i < gaps.size() && i < 20; ++i) list += (i ? ", " : "") + gaps[i];
        if (gaps.size() > 20) list += fmt::format(", ... ({} total)", gaps.size());
        throw input_error(fmt::format("{}: missing embeddings for {}", file, list), file);
    }
    return table;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path.string(), path.string());
    out << "run,patch,sub";
    for (std::size_t d = 0; d < table.dimension(); ++d) out << ",f" << d;
    out << '\n';
    for (const auto& [key, values] : table.entries()) {
        out << key.run << ',' << key.patch << ',';
        if (key.sub) out << *key.sub;
        for (double v : values) out << ',' << text::format_double(v);
        out << '\n';
    }
    if (!out) throw input_error("write failed: " + path.string(), path.string());
}

} // namespace stens
