#include "clgen/data/fixtures.hpp"

#include "clgen/common/error.hpp"
#include "clgen/common/rng.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <string>
#include <vector>

namespace clgen::data {

namespace {

using Values = std::map<std::string, std::vector<std::string>>;

struct Intent {
    std::string name;
    std::vector<std::string> slots;
    std::vector<std::string> templates;
};

struct TaskDomain {
    std::string name;
    Values values;
    std::vector<Intent> intents;
};

// Each domain draws slot values from its own lists; the connective words of
// the templates are shared so a vocabulary built on any one domain covers
// part of the others.
const std::vector<TaskDomain>& task_domains() {
    static const std::vector<TaskDomain> domains{
        {"alarm",
         {{"time", {"6 am", "6:30 am", "7 am", "7:15 am", "7:45 am", "8 am", "8:30 am", "9 pm", "10 pm", "10:30 pm",
                    "11 pm", "5:45 am"}},
          {"label", {"gym", "work", "medicine", "yoga", "school", "meeting", "laundry", "dinner", "bus", "piano"}},
          {"day", {"monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday", "weekdays",
                   "weekends", "tomorrow"}}},
         {{"set_alarm", {"time", "label"},
           {"i have set an alarm for {time} called {label} .", "your {label} alarm is set for {time} .",
            "okay , the alarm for {time} is set and named {label} ."}},
          {"cancel_alarm", {"time"}, {"i have cancelled the alarm for {time} .", "the {time} alarm is now cancelled ."}},
          {"query_alarm", {"day", "time"},
           {"you have an alarm on {day} at {time} .", "on {day} your alarm goes off at {time} ."}},
          {"confirm", {"time", "day"},
           {"do you want the alarm at {time} on {day} ?", "should i set it for {time} on {day} ?"}}}},
        {"restaurant",
         {{"name", {"golden dragon", "pizza palace", "the green leaf", "blue lagoon", "sushi house", "taj garden",
                    "el toro", "le bistro", "noodle bar", "olive tree"}},
          {"food", {"thai", "italian", "chinese", "indian", "mexican", "french", "japanese", "greek", "korean", "vegan"}},
          {"area", {"north", "south", "east", "west", "centre", "riverside", "old town", "harbour"}},
          {"price", {"cheap", "moderate", "expensive"}},
          {"party", {"two", "three", "four", "five", "six", "seven", "eight"}}},
         {{"inform", {"name", "food", "area"},
           {"{name} serves {food} food in the {area} .", "i recommend {name} , a {food} place in the {area} ."}},
          {"inform_price", {"name", "price"}, {"{name} is in the {price} price range .", "{name} is {price} ."}},
          {"book", {"name", "party"},
           {"i have booked a table for {party} at {name} .", "your table for {party} at {name} is booked ."}},
          {"confirm", {"food", "area"},
           {"do you want {food} food in the {area} ?", "are you looking for a {food} place in the {area} ?"}}}},
        {"flight",
         {{"airline", {"delta", "united", "lufthansa", "emirates", "ryanair", "qantas", "klm", "air france", "jetblue",
                       "iberia"}},
          {"destination", {"paris", "tokyo", "new york", "berlin", "sydney", "rome", "madrid", "toronto", "dubai",
                           "lisbon"}},
          {"date", {"march 3", "april 12", "may 20", "june 8", "july 15", "august 1", "september 9", "october 30",
                    "november 2", "december 24"}},
          {"seat", {"window", "aisle", "middle"}}},
         {{"inform", {"airline", "destination", "date"},
           {"there is a {airline} flight to {destination} on {date} .", "{airline} flies to {destination} on {date} ."}},
          {"book", {"destination", "date"},
           {"i have booked your flight to {destination} on {date} .", "your trip to {destination} on {date} is booked ."}},
          {"seat", {"seat", "airline"},
           {"you have a {seat} seat on the {airline} flight .", "i found a {seat} seat with {airline} ."}},
          {"confirm", {"destination"},
           {"do you want to fly to {destination} ?", "should i look for flights to {destination} ?"}}}},
        {"weather",
         {{"city", {"london", "chicago", "seattle", "boston", "denver", "miami", "dublin", "oslo", "cairo", "lima"}},
          {"condition", {"sunny", "rainy", "cloudy", "windy", "snowy", "foggy", "stormy", "clear"}},
          {"temperature", {"10 degrees", "15 degrees", "20 degrees", "25 degrees", "30 degrees", "minus 5 degrees",
                           "zero degrees"}},
          {"when", {"this morning", "tonight", "this afternoon", "this weekend", "later today"}}},
         {{"inform", {"city", "condition", "temperature"},
           {"it is {condition} in {city} with {temperature} .", "{city} is {condition} and {temperature} right now ."}},
          {"forecast", {"city", "condition", "when"},
           {"expect {condition} weather in {city} {when} .", "{when} it will be {condition} in {city} ."}},
          {"temperature", {"city", "temperature"},
           {"the temperature in {city} is {temperature} .", "it is {temperature} in {city} ."}},
          {"confirm", {"city"}, {"do you mean the weather in {city} ?", "should i check {city} ?"}}}},
        {"music",
         {{"song", {"yellow submarine", "bohemian rhapsody", "hey jude", "purple rain", "let it be", "imagine",
                    "thriller", "respect", "hotel california", "wonderwall"}},
          {"artist", {"the beatles", "queen", "prince", "john lennon", "michael jackson", "aretha franklin",
                      "the eagles", "oasis", "adele", "coldplay"}},
          {"genre", {"jazz", "rock", "pop", "blues", "classical", "reggae", "country", "funk"}},
          {"volume", {"low", "medium", "high", "maximum"}}},
         {{"play", {"song", "artist"}, {"now playing {song} by {artist} .", "here is {song} by {artist} ."}},
          {"play_genre", {"genre"}, {"playing some {genre} music for you .", "here is a {genre} playlist ."}},
          {"set_volume", {"volume"}, {"the volume is now {volume} .", "i set the volume to {volume} ."}},
          {"confirm", {"artist"}, {"do you want to hear {artist} ?", "should i play something by {artist} ?"}}}},
    };
    return domains;
}

struct ChatTopic {
    std::string name;
    std::vector<std::string> filler;
    std::vector<std::pair<std::string, std::vector<std::string>>> exchanges;
};

const std::vector<ChatTopic>& chat_topics() {
    static const std::vector<ChatTopic> topics{
        {"sports",
         {"i watched the game last night .", "my team plays on saturday .", "i go running every morning .",
          "the stadium was packed .", "i love playing football ."},
         {{"did you see the match ?", {"yes , it was a great match .", "no , i missed it this time ."}},
          {"who is your favourite player ?", {"i really like the striker .", "the goalkeeper is my favourite ."}},
          {"do you play any sport ?", {"i play tennis on weekends .", "i swim twice a week ."}},
          {"want to go to the game ?", {"sure , i would love to go .", "sorry , i am busy that day ."}}}},
        {"food",
         {"i am so hungry .", "i cooked pasta yesterday .", "the new cafe opened downtown .",
          "i am trying to eat healthy .", "my mother makes great soup ."},
         {{"what should we eat tonight ?", {"how about some pizza ?", "let us try the new sushi place ."}},
          {"do you like spicy food ?", {"yes , the spicier the better .", "not really , i prefer mild food ."}},
          {"can you cook ?", {"i can make a few simple dishes .", "no , i always burn everything ."}},
          {"want some coffee ?", {"yes please , with milk .", "no thanks , i had tea already ."}}}},
        {"travel",
         {"i just got back from holiday .", "the flight was delayed .", "i want to see the mountains .",
          "my suitcase is too heavy .", "the hotel had a nice view ."},
         {{"where are you going this summer ?", {"i am going to the beach .", "i will visit my grandparents ."}},
          {"have you been abroad ?", {"yes , i lived in spain for a year .", "no , never , but i want to ."}},
          {"do you prefer trains or planes ?", {"trains are more relaxing .", "planes are faster for me ."}},
          {"how was your trip ?", {"it was wonderful , thanks .", "it was tiring but fun ."}}}},
        {"work",
         {"i have a deadline tomorrow .", "my boss is on holiday .", "the office is quiet today .",
          "we hired a new designer .", "the meeting ran late ."},
         {{"how is your new job ?", {"i really enjoy it so far .", "it is busy but interesting ."}},
          {"do you work from home ?", {"yes , three days a week .", "no , i go to the office daily ."}},
          {"are you free for lunch ?", {"sure , let us meet at noon .", "sorry , i have a call then ."}},
          {"did you finish the report ?", {"yes , i sent it this morning .", "almost , i need one more hour ."}}}},
        {"movies",
         {"i saw a great film yesterday .", "the cinema was full .", "i prefer watching at home .",
          "the sequel comes out soon .", "my sister loves horror films ."},
         {{"what movie should we watch ?", {"let us watch a comedy .", "how about that new thriller ?"}},
          {"did you like the ending ?", {"yes , it was a surprise .", "no , it felt rushed ."}},
          {"who is your favourite actor ?", {"i like the lead from that space movie .",
                                             "i have always liked old western stars ."}},
          {"want to go to the cinema ?", {"sure , which time ?", "maybe next week instead ."}}}},
    };
    return topics;
}

std::string fill(const std::string& tmpl, const std::map<std::string, std::string>& values) {
    std::string out;
    for (std::size_t i = 0; i < tmpl.size();) {
        if (tmpl[i] == '{') {
            const auto close = tmpl.find('}', i);
            out += values.at(tmpl.substr(i + 1, close - i - 1));
            i = close + 1;
        } else {
            out.push_back(tmpl[i++]);
        }
    }
    return out;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
    std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
    return v[d(rng)];
}

nlohmann::ordered_json task_record(const TaskDomain& dom, Rng& rng) {
    const Intent& intent = pick(dom.intents, rng);
    std::map<std::string, std::string> chosen;
    nlohmann::ordered_json slots = nlohmann::ordered_json::object();
    for (const auto& s : intent.slots) {
        chosen[s] = pick(dom.values.at(s), rng);
        slots[s] = chosen[s];
    }
    nlohmann::ordered_json rec;
    rec["domain"] = dom.name;
    rec["input"] = {{"intent", intent.name}, {"slots", slots}};
    rec["output"] = fill(pick(intent.templates, rng), chosen);
    return rec;
}

nlohmann::ordered_json chat_record(const ChatTopic& topic, Rng& rng) {
    std::uniform_int_distribution<int> n_filler(2, 5);
    nlohmann::ordered_json context = nlohmann::ordered_json::array();
    const int n = n_filler(rng);
    for (int i = 0; i < n; ++i)
        context.push_back(pick(topic.filler, rng));
    const auto& exchange = pick(topic.exchanges, rng);
    context.push_back(exchange.first);
    nlohmann::ordered_json rec;
    rec["domain"] = topic.name;
    rec["context"] = context;
    rec["response"] = pick(exchange.second, rng);
    return rec;
}

void write_split(const std::filesystem::path& dir, const std::string& split, int per_domain, Rng& rng, bool task) {
    std::ofstream os(dir / (split + ".jsonl"));
    if (!os)
        throw Error("fixtures: cannot write into " + dir.string());
    const std::size_t n_domains = task ? task_domains().size() : chat_topics().size();
    for (std::size_t d = 0; d < n_domains; ++d)
        for (int i = 0; i < per_domain; ++i)
            os << (task ? task_record(task_domains()[d], rng) : chat_record(chat_topics()[d], rng)).dump() << '\n';
}

} // namespace

void generate_fixtures(const std::filesystem::path& out, const FixtureOptions& opts) {
    if (opts.train_per_domain < 1 || opts.test_per_domain < 1)
        throw InputError("fixtures: split sizes must be >= 1");
    for (const bool task : {true, false}) {
        const auto dir = out / (task ? "task-oriented" : "chitchat");
        std::filesystem::create_directories(dir);
        Rng train_rng = make_stream(opts.seed, task ? "fixture.task.train" : "fixture.chat.train");
        Rng test_rng = make_stream(opts.seed, task ? "fixture.task.test" : "fixture.chat.test");
        write_split(dir, "train", opts.train_per_domain, train_rng, task);
        write_split(dir, "test", opts.test_per_domain, test_rng, task);
    }
}

} // namespace clgen::data
