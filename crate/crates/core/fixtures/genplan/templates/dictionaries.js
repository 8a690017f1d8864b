// Dictionaries for the dialog engine: mirons, variables and states.
// Regenerate with `omnigraph generate`; edits here are overwritten.

export const mirons = {
//[# foreach m in $root[type=Miron] #]
//: ID=m.id
//: NAME=m.attr(name)
//: MOD=m.attr(modality)
//: KIND=m.attr(type)
  "__NAME__": { id: __ID__, modality: "__MOD__", type: "__KIND__" },
//[# end #]
};

export const variables = {
//[# foreach v in $root[type=Variable] #]
//: ID=v.id
//: NAME=v.attr(name)
  "__NAME__": __ID__,
//[# end #]
};

export const states = {
//[# foreach s in $root[type=State] #]
//: ID=s.id
//: NAME=s.attr(name)
//: ON=s.attr(active)
  "__NAME__": { id: __ID__, active: __ON__ },
//[# end #]
};
