#include "dualq/llm.hpp"

namespace dualq {

namespace {

// Prompt bodies as used for classification: one line per printed line, the review
// goes where <review> stands.
constexpr std::string_view kPlZeroShot = R"prompt(Przypisz podaną niżej opinie do jednej z trzech klas: "dual quality", "other problems" lub "standard".
W odpowiedzi podaj jedynie nazwę klasy, bez dodatkowego komentarza.
Treść opinii:
<review>)prompt";

constexpr std::string_view kPlFewShot = R"prompt(Przypisz podaną niżej opinie do jednej z trzech klas: "dual quality", "other problems" lub "standard".
Przykłady:
Kapsułki są lepsze, niż na polski rynek tej samej firmy. -- dual quality
Dobry smak kawy. Kraj pochodzenia Niemcy. Nie jest tak kwaśna jak kupiona w kraju. -- dual quality
Mój ulubiony zapach. Sądzę jednak, że są dużo mniej trwałe niż te, które poprzednim razem kupiłam w sephorze. -- other problems
Proszek może i z Niemiec, ale produkcja Czechy - wprowadzanie klienta w błąd. -- other problems
Niezły preparat. Łagodzi trochę bóle i zmęczenie oczu. Stosuję od czasu do czasu. -- standard
jest ok, nie zauważyłam większej różnicy między "polską" a "niemiecką" wersją -- standard
W odpowiedzi podaj jedynie nazwę klasy, bez dodatkowego komentarza.
Treść opinii:
<review>)prompt";

constexpr std::string_view kPlZeroShotInst = R"prompt(Przypisz podaną niżej opinie do jednej z trzech klas: "dual quality", "other problems" lub "standard".
Wytyczne dla każdej z klas:
"dual quality" (podwójna jakość) -- opinia zawiera informacje o tym, że klient kupił ten sam produkt w dwóch krajach i zauważył różnicę w jakości, wydajności, składzie itp. Nie jest konieczne podawanie dokładnych nazw krajów, wystarczą zwroty takie jak „za granicą” lub „w naszym kraju”. Klient porównuje dwa takie same produkty lub grupy produktów. Wskazanie różnicy w cenie, dostępności lub ogólne stwierdzenie, takie jak „istnieją różnice między produktami zakupionymi we Francji i w Polsce” nie są klasyfikowane jako podwójna jakość.
"other problems" (inne problemy) -- opinia nie wskazuje na problem podwójnej jakości, ale dostarcza informacji o innych problemach, wśród których możemy wyróżnić: różnice w produktach wynikające z innego miejsca zakupu (ten sam rynek), miejsca pakowania lub otrzymanej partii; problemy z samym produktem wymagające głębszej analizy np. pogorszenie jakości z upływem czasu; praktyki niezgodne z prawem i/lub naruszające prawa klienta np. produkt jest prawdopodobnie podrobiony, podejrzenie oszustwa, wprowadzanie klienta w błąd, brak instrukcji w wymaganym języku, brak daty ważności itp.
"standard" -- standardowa opinia o produkcie, w której opisane uwagi dotyczą samego produktu i nie wskazują na problemy omówione przy klasach „podwójna jakość” lub „inne problemy”.
W odpowiedzi podaj jedynie nazwę klasy, bez dodatkowego komentarza.
Treść opinii:
<review>)prompt";

constexpr std::string_view kPlFewShotInst = R"prompt(Przypisz podaną niżej opinie do jednej z trzech klas: "dual quality", "other problems" lub "standard".
Wytyczne dla każdej z klas:
"dual quality" (podwójna jakość) -- opinia zawiera informacje o tym, że klient kupił ten sam produkt w dwóch krajach i zauważył różnicę w jakości, wydajności, składzie itp. Nie jest konieczne podawanie dokładnych nazw krajów, wystarczą zwroty takie jak „za granicą” lub „w naszym kraju”. Klient porównuje dwa takie same produkty lub grupy produktów. Wskazanie różnicy w cenie, dostępności lub ogólne stwierdzenie, takie jak „istnieją różnice między produktami zakupionymi we Francji i w Polsce” nie są klasyfikowane jako podwójna jakość.
Przykłady: "Kapsułki są lepsze, niż na polski rynek tej samej firmy.", "Dobry smak kawy. Kraj pochodzenia Niemcy. Nie jest tak kwaśna jak kupiona w kraju."
"other problems" (inne problemy) -- opinia nie wskazuje na problem podwójnej jakości, ale dostarcza informacji o innych problemach, wśród których możemy wyróżnić: różnice w produktach wynikające z innego miejsca zakupu (ten sam rynek), miejsca pakowania lub otrzymanej partii; problemy z samym produktem wymagające głębszej analizy np. pogorszenie jakości z upływem czasu; praktyki niezgodne z prawem i/lub naruszające prawa klienta np. produkt jest prawdopodobnie podrobiony, podejrzenie oszustwa, wprowadzanie klienta w błąd, brak instrukcji w wymaganym języku, brak daty ważności itp.
Przykłady: "Mój ulubiony zapach. Sądzę jednak, że są dużo mniej trwałe niż te, które poprzednim razem kupiłam w sephorze", "Proszek może i z Niemiec, ale produkcja Czechy - wprowadzanie klienta w błąd."
"standard" -- standardowa opinia o produkcie, w której opisane uwagi dotyczą samego produktu i nie wskazują na problemy omówione przy klasach „podwójna jakość” lub „inne problemy”.
Przykłady: "Niezły preparat. Łagodzi trochę bóle i zmęczenie oczu. Stosuję od czasu do czasu.", "jest ok, nie zauważyłam większej różnicy między "polską" a "niemiecką" wersją"
W odpowiedzi podaj jedynie nazwę klasy, bez dodatkowego komentarza.
Treść opinii:
<review>)prompt";

constexpr std::string_view kEnZeroShot = R"prompt(Assign the following review to one of three classes: “dual quality”, “other problems” or “standard”.
In your answer, provide only the name of the class, without additional comment.
Review text:
<review>)prompt";

constexpr std::string_view kEnFewShot = R"prompt(Assign the following review to one of three classes: “dual quality”, “other problems” or “standard”.
Examples:
The capsules are better than those on the Polish market from the same company. -- dual quality
Good coffee taste. Country of origin: Germany. It is not as acidic as the one bought in the country. -- dual quality
My favorite scent. However, I think it's much less long-lasting than the one I bought at Sephora last time. -- other problems
The powder may be from Germany, but it's made in the Czech Republic - misleading the customer. -- other problems
Decent product. It slightly alleviates eye pain and fatigue. I use it occasionally. -- standard
It's okay, I didn't notice much difference between the "Polish" and "German" version. -- standard
In your answer, provide only the name of the class, without additional comment.
Review text:
<review>)prompt";

constexpr std::string_view kEnZeroShotInst = R"prompt(Assign the following review to one of three classes: “dual quality”, “other problems” or “standard”.
Guidelines for each category:
"dual quality" -- The review includes information that the customer purchased the same product in two different countries and noticed a difference in quality, performance, composition, etc. It is not necessary to specify the exact names of the countries; phrases like "abroad" or "in our country" are sufficient. The customer compares two identical products or groups of products. Indicating a difference in price, availability, or a general statement such as "there are differences between products purchased in France and Poland" is not classified as dual quality.
"other problems" -- The review does not indicate an issue of dual quality but provides information on other problems, which can include: differences in products resulting from a different place of purchase (same market), place of packaging, or the received batch; problems with the product itself requiring deeper analysis, such as deterioration in quality over time; practices that are illegal and/or violate customer rights, such as the product potentially being counterfeit, suspicion of fraud, misleading the customer, lack of instructions in the required language, lack of an expiration date, etc.
"standard" -- A standard product review where the comments pertain only to the product itself and do not indicate the problems discussed in the "dual quality" or "other problems" categories.
In your answer, provide only the name of the class, without additional comment.
Review text:
<review>)prompt";

constexpr std::string_view kEnFewShotInst = R"prompt(Assign the following review to one of three classes: “dual quality”, “other problems” or “standard”.
Guidelines for each category:
"dual quality" -- The review includes information that the customer purchased the same product in two different countries and noticed a difference in quality, performance, composition, etc. It is not necessary to specify the exact names of the countries; phrases like "abroad" or "in our country" are sufficient. The customer compares two identical products or groups of products. Indicating a difference in price, availability, or a general statement such as "there are differences between products purchased in France and Poland" is not classified as dual quality.
Examples: "The capsules are better than those on the Polish market from the same company.", "Good coffee taste. Country of origin: Germany. It is not as acidic as the one bought in the country."
"other problems" -- The review does not indicate an issue of dual quality but provides information on other problems, which can include: differences in products resulting from a different place of purchase (same market), place of packaging, or the received batch; problems with the product itself requiring deeper analysis, such as deterioration in quality over time; practices that are illegal and/or violate customer rights, such as the product potentially being counterfeit, suspicion of fraud, misleading the customer, lack of instructions in the required language, lack of an expiration date, etc.
Examples: "My favorite scent. However, I think it's much less long-lasting than the one I bought at Sephora last time.", "The powder may be from Germany, but it's made in the Czech Republic - misleading the customer."
"standard" -- A standard product review where the comments pertain only to the product itself and do not indicate the problems discussed in the "dual quality" or "other problems" categories.
Examples: "Decent product. It slightly alleviates eye pain and fatigue. I use it occasionally.", "It's okay, I didn't notice much difference between the "Polish" and "German" version."
In your answer, provide only the name of the class, without additional comment.
Review text:
<review>)prompt";

} // namespace

std::string_view builtin_prompt_body(PromptVariant v, PromptLanguage l) {
    const bool pl = l == PromptLanguage::Pl;
    switch (v) {
    case PromptVariant::ZeroShot: return pl ? kPlZeroShot : kEnZeroShot;
    case PromptVariant::FewShot: return pl ? kPlFewShot : kEnFewShot;
    case PromptVariant::ZeroShotInst: return pl ? kPlZeroShotInst : kEnZeroShotInst;
    case PromptVariant::FewShotInst: return pl ? kPlFewShotInst : kEnFewShotInst;
    }
    return {};
}

} // namespace dualq
