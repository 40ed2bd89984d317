#include "cdskit/app/io_formats.hpp"
#include "cdskit/matrix_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace cdskit::app {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

Index shift_id(long long raw, Index base, const std::string& what)
{
    if (raw < static_cast<long long>(base))
        throw InputError(what + ": id " + std::to_string(raw) + " is below the index base " + std::to_string(base));
    return static_cast<Index>(raw) - base;
}

std::vector<Index> json_ids(const Json& j, Index base, const std::string& what)
{
    if (!j.is_array())
        throw InputError(what + " must be an array of ids");
    std::vector<Index> out;
    for (const auto& v : j) {
        if (!v.is_number_integer())
            throw InputError(what + " must contain integers");
        out.push_back(shift_id(v.get<long long>(), base, what));
    }
    return out;
}

fs::path sibling(const fs::path& manifest, const Json& j, const char* key, const std::string& what)
{
    if (!j.contains(key) || !j[key].is_string())
        throw InputError(what + ": missing string field \"" + key + "\"");
    const fs::path p = j[key].get<std::string>();
    return p.is_absolute() ? p : manifest.parent_path() / p;
}

}  // namespace

std::vector<KeyValue> read_key_value_file(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open config file " + path.string());
    std::vector<KeyValue> out;
    std::string line;
    for (std::size_t no = 1; std::getline(in, line); ++no) {
        const auto hash = line.find_first_of("#;");
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty())
            continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw InputError(path.string() + ":" + std::to_string(no) + ": expected key=value");
        KeyValue kv{trim(body.substr(0, eq)), trim(body.substr(eq + 1)), no};
        if (kv.key.empty())
            throw InputError(path.string() + ":" + std::to_string(no) + ": empty key");
        if (kv.value.size() >= 2 && kv.value.front() == '"' && kv.value.back() == '"')
            kv.value = kv.value.substr(1, kv.value.size() - 2);
        out.push_back(std::move(kv));
    }
    return out;
}

std::vector<Index> parse_id_list(const std::string& text, Index base, const std::string& what)
{
    std::vector<Index> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty())
            continue;
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(item, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size())
            throw InputError(what + ": \"" + item + "\" is not an integer id");
        out.push_back(shift_id(v, base, what));
    }
    return out;
}

Json read_json(const fs::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw InputError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

void write_json(const fs::path& path, const Json& value)
{
    std::ofstream out(path);
    if (!out)
        throw InputError("cannot write " + path.string());
    out << value.dump(2) << '\n';
}

Annotation read_annotation(const fs::path& path, Index base)
{
    const Json j = read_json(path);
    const std::string what = path.string();
    try {
        Annotation a;
        a.mode = parse_annotation_mode(j.at("mode").get<std::string>());
        a.ids = json_ids(j.at("ids"), base, what + ": ids");
        if (j.contains("labels"))
            a.labels = j["labels"].get<std::vector<int>>();
        return a;
    } catch (const Json::exception& e) {
        throw InputError(what + ": " + e.what());
    }
}

std::vector<Scribbles> read_scribbles(const fs::path& path, Index base)
{
    const Json j = read_json(path);
    const std::string what = path.string();
    if (!j.is_array())
        throw InputError(what + ": expected an array of scribble records");
    std::vector<Scribbles> out;
    try {
        for (const auto& rec : j) {
            Scribbles s;
            s.image = rec.at("image").get<std::size_t>();
            if (s.image < base)
                throw InputError(what + ": image index below the index base");
            s.image -= base;
            if (rec.contains("fg"))
                s.fg = json_ids(rec["fg"], base, what + ": fg");
            if (rec.contains("bg"))
                s.bg = json_ids(rec["bg"], base, what + ": bg");
            out.push_back(std::move(s));
        }
    } catch (const Json::exception& e) {
        throw InputError(what + ": " + e.what());
    }
    return out;
}

CosegImage read_coseg_instance(const fs::path& path)
{
    const Json j = read_json(path);
    const std::string what = path.string();
    CosegImage img;
    img.color = io::read_matrix(sibling(path, j, "color", what));
    img.sift = io::read_matrix(sibling(path, j, "sift", what));
    img.hog = io::read_matrix(sibling(path, j, "hog", what));
    img.adjacency = io::read_matrix(sibling(path, j, "adjacency", what));
    if (j.contains("objectness")) {
        const Matrix p = io::read_matrix(sibling(path, j, "objectness", what));
        if (p.cols() != 1 && p.rows() != 1)
            throw InputError(what + ": objectness must be a single row or column");
        img.objectness = Eigen::Map<const Vector>(p.data(), p.size());
    }
    return img;
}

MiniBatch read_batch(const fs::path& path)
{
    const Json j = read_json(path);
    const std::string what = path.string();
    MiniBatch b;
    b.features = io::read_matrix(sibling(path, j, "features", what));
    b.labels = io::read_integer_list(sibling(path, j, "labels", what));
    std::vector<long> distinct = b.labels;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    b.identities = distinct.size();
    b.per_identity = distinct.empty() ? 0 : b.labels.size() / distinct.size();
    b.validate();
    return b;
}

std::vector<RankedList> read_rankings(const fs::path& path, Index base)
{
    const Json j = read_json(path);
    const std::string what = path.string();
    if (!j.is_array())
        throw InputError(what + ": expected an array of ranked lists");
    std::vector<RankedList> out;
    try {
        for (const auto& rec : j) {
            RankedList r;
            r.query = shift_id(rec.at("query").get<long long>(), base, what + ": query");
            r.ids = json_ids(rec.at("ids"), base, what + ": ids");
            if (rec.contains("scores"))
                r.scores = rec["scores"].get<std::vector<double>>();
            if (!r.scores.empty() && r.scores.size() != r.ids.size())
                throw InputError(what + ": scores and ids differ in length");
            out.push_back(std::move(r));
        }
    } catch (const Json::exception& e) {
        throw InputError(what + ": " + e.what());
    }
    return out;
}

std::vector<Index> read_id_file(const fs::path& path, Index base)
{
    std::vector<Index> out;
    for (long v : io::read_integer_list(path))
        out.push_back(shift_id(v, base, path.string()));
    return out;
}

std::vector<long> read_labels(const fs::path& path)
{
    return io::read_integer_list(path);
}

Json ids_to_json(const std::vector<Index>& ids, Index base)
{
    Json out = Json::array();
    for (Index i : ids)
        out.push_back(i + base);
    return out;
}

Json ranking_to_json(const RankedList& list, Index base, std::size_t top)
{
    const std::size_t count = top == 0 ? list.ids.size() : std::min(top, list.ids.size());
    Json ids = Json::array(), scores = Json::array();
    for (std::size_t k = 0; k < count; ++k) {
        ids.push_back(list.ids[k] + base);
        if (k < list.scores.size())
            scores.push_back(list.scores[k]);
    }
    Json out;
    out["query"] = list.query + base;
    out["ids"] = std::move(ids);
    out["scores"] = std::move(scores);
    return out;
}

}  // namespace cdskit::app
