// Intent handlers: each rule fires its actions when its conditions hold.

//[# foreach r in $root[type=Rule] #]
//: RID=r.id
export function rule__RID__(ctx) {
//[# if r.attr(conditions) == all #]
  const ok = ctx.all([
//[# else #]
  const ok = ctx.any([
//[# end #]
//[# foreach c in $r <- condition #]
//: CID=c.id
    __CID__,
//[# end #]
  ]);
  if (!ok) return [];
  return [
//[# foreach a in $r -> action #]
//: AID=a.id
//: KIND=a.type
    { target: __AID__, kind: "__KIND__" },
//[# end #]
  ];
}

//[# end #]
export const ruleCount = 0
//[# foreach r in $root[type=Rule] #]
  + 1
//[# end #]
;
