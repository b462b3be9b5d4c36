#pragma once

// Imperative verb lexicon. Entries are lowercase base forms.

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "procmine/error.hpp"
#include "procmine/text.hpp"

namespace procmine {

namespace detail {

inline constexpr std::string_view kBaseVerbs = R"(
accept access accommodate accomplish account acknowledge acquire activate adapt add address
adjust administer admit adopt advance advise affect afford agree aim alert align allocate allow
alter amend analyse analyze annotate announce answer anticipate append apply appoint approach
approve archive argue arrange articulate ask assemble assert assess assign assist associate
assume assure attach attempt attend attribute audit authenticate authorize automate avoid back
backup balance ban base batch become begin behave believe bind block board book boot borrow
bounce brace break bring browse bubble budget build bundle burn buy calculate calibrate call
cancel capture care carry cast catch categorize cause center change charge chart chat check
choose cite claim clarify classify clean clear click climb clip clone close coach code collapse
collect combine come comment commit communicate compare compile complete comply compose
compress compute concatenate conclude conduct configure confirm connect consider consolidate
construct consult consume contact contain continue contract contribute control convert copy
correct count cover crash create credit crop cross cut cycle deactivate deal debug decide
declare decode decommission decompress decrease decrypt dedicate defer define defragment delay
delegate delete deliver demonstrate deny deploy describe deselect design designate detach
detect determine develop diagnose dial dim direct disable disassemble discard disconnect
discover discuss dismiss dismount dispatch display dispose distinguish distribute divide do
document double download drag draw drop duplicate edit eject elect eliminate email embed
emphasize employ empty emulate enable encode encourage encrypt end enforce engage enhance
enlarge enroll ensure enter establish estimate evaluate examine exchange exclude execute exit
expand expect experiment expire explain explore export expose extend extract facilitate fasten
fetch file fill filter finalize find finish fit fix flag flash flip flush fold follow force
format forward free freeze gather generate get give go grant grasp group guarantee guide halt
handle hang head help hide highlight hit hold hover identify ignore illustrate implement import
improve include increase indicate inform initialize initiate inject input insert inspect
install instruct integrate interrupt introduce invoke isolate issue join jump keep key kill
label launch lay lead learn leave let lift limit link list listen load locate lock log look
loosen lower maintain make manage map mark match maximize measure merge migrate minimize mirror
modify monitor mount move multiply name navigate need note notify obtain open operate optimize
order organize overwrite own pack page pair paste patch pause pay perform pick ping place plan
play plug point poll populate position post power prefer prepare press prevent preview print
prioritize proceed process program prompt propagate protect provide pull purchase purge push
put query queue quit raise re-enter re-run reach read reassign reattach reboot rebuild recall
receive recharge recheck reclaim recognize recommend reconfigure reconnect record recover
recreate redeploy redirect redo reduce refer refresh regenerate register reinsert reinstall
reject relaunch release reload relocate remember remount remove rename reopen reorder repair
repeat replace replicate reply report reposition request require reseat reserve reset resize
resolve respond restart restore restrict resubmit resume resync retain retrieve retry return
reuse revert review revise rewind rewrite rollback rotate route run save scan schedule scroll
search secure see seek select send separate serve service set setup shift ship show shut sign
simulate skip slide snap sort specify split ssh stabilize stage start stay stop store stream
submit subscribe substitute suggest supply support suspend swap switch sync synchronize tab tag
take tap target teach tell terminate test throttle tick tighten toggle track transfer transform
translate transmit trigger trim troubleshoot try tune turn type uncheck uncomment undo
uninstall unlock unmount unpack unplug unregister unzip update upgrade upload use validate
verify view visit wait walk want warn watch wipe withdraw work wrap write zip zoom
)";

inline constexpr std::string_view kDomainVerbs = R"(
cat cd chmod chown cp curl double-click failover ftp grep gzip mkdir mv power-cycle provision quiesce
reapply reauthenticate right-click recompile reformat reimage reindex reinitialize relink remap repartition
repopulate reprovision rerun restage retest revalidate rm rsync scp sudo tar telnet unassign
uncompress unconfigure undeploy unfreeze unhide unload unmap unmark unpin unselect unset
unshare unsubscribe unsuspend untag untar wget
)";

// Whitespace-separated words; '#' starts a comment that runs to end of line.
inline std::set<std::string> parse_word_list(std::string_view data) {
  std::set<std::string> out;
  std::istringstream in{std::string(data)};
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream words(line);
    std::string w;
    while (words >> w) out.insert(to_lower(w));
  }
  return out;
}

}  // namespace detail

struct ImperativeLexicon {
  std::set<std::string> verbs;
  std::set<std::string> domain_verbs;  // user-extensible technical vocabulary

  bool contains(std::string_view token) const {
    const std::string t(token);
    return verbs.contains(t) || domain_verbs.contains(t);
  }

  void add_domain_verb(std::string verb) {
    verb = to_lower(trim(verb));
    if (!verb.empty()) domain_verbs.insert(std::move(verb));
  }

  static const ImperativeLexicon& builtin() {
    static const ImperativeLexicon lex{detail::parse_word_list(detail::kBaseVerbs),
                                       detail::parse_word_list(detail::kDomainVerbs)};
    return lex;
  }
};

// Plain text, one lowercase verb per line, '#' comments.
inline std::set<std::string> load_word_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read word list '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  auto words = detail::parse_word_list(buf.str());
  if (words.empty()) throw Error(ErrorCode::ConfigError, "word list '" + path + "' is empty");
  return words;
}

// Builtin lexicon extended with the verbs listed in `domain_path`.
inline ImperativeLexicon load_lexicon(const std::string& domain_path) {
  auto lex = ImperativeLexicon::builtin();
  for (auto& v : load_word_list(domain_path)) lex.domain_verbs.insert(v);
  return lex;
}

}  // namespace procmine
