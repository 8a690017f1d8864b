// Rule weights: one row per rule, inputs are the condition sources.

export const weights = [
//[# foreach r in $root[type=Rule] #]
//: RID=r.id
//: W=r.attr(weight)
//: P=r.attr(priority)
  {
    rule: __RID__,
    weight: __W__,
    priority: __P__,
    inputs: [
//[# foreach c in $r <- condition #]
//: CID=c.id
      __CID__,
//[# end #]
    ],
  },
//[# end #]
];
